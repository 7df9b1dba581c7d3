import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pimfft import ConfigurationError, CrossbarDims, CrossbarError, new_crossbar
from pimfft.arith import HALF, SINGLE, ComplexSlot, ScratchLayout
from pimfft.fft import (
    FFTConfig,
    bit_reversal_permute,
    butterfly_rows,
    load_sequence,
    plan_fft,
    read_codes,
    read_sequence,
    run_fft,
    run_inverse_fft,
    stage_align_r,
    stage_restore_r,
    swap_pairs_2r,
)
from pimfft.fft.layout import identity
from pimfft.oracle import FormatEmulator, bit_reverse_indices, host_fft, host_ifft, relative_l2

from conftest import get_codes, put_codes

CONFIGS = {
    "R": FFTConfig.R(),
    "TwoR": FFTConfig.TwoR(),
    "TwoRBeta2": FFTConfig.TwoRBeta(2),
    "TwoRBeta2p": FFTConfig.TwoRBeta(2, True),
    "TwoRBeta4": FFTConfig.TwoRBeta(4),
}


def cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def setup(n, config, fmt=SINGLE, direction="forward", cols=1024, **kw):
    dims = CrossbarDims(n // config.elements_per_row, cols)
    plan = plan_fft(n, dims, fmt, config, direction, **kw)
    parts = plan.partitions if config.use_partitions else None
    return new_crossbar(dims, parts), plan


def emulated_fft(x, fmt, direction="forward"):
    """Radix-2 DIT on format codes with every operation rounded like the crossbar."""
    emu = FormatEmulator(fmt)
    n = len(x)
    x = np.asarray(x, dtype=complex)[bit_reverse_indices(n)]
    re, im = fmt.encode(x.real), fmt.encode(x.imag)
    sign = -1.0 if direction == "forward" else 1.0
    h = 1
    while h < n:
        j = np.arange(n)
        lo = j[(j & h) == 0]
        hi = lo + h
        w = np.exp(sign * 2j * np.pi * (lo % h) / (2 * h))
        tr, ti = emu.complex_mul(re[hi], im[hi], fmt.encode(w.real), fmt.encode(w.imag))
        ur, ui = re[lo], im[lo]
        re[hi], im[hi] = emu.sub(ur, tr)[0], emu.sub(ui, ti)[0]
        re[lo], im[lo] = emu.add(ur, tr)[0], emu.add(ui, ti)[0]
        h *= 2
    if direction == "inverse":
        for _ in range(n.bit_length() - 1):
            re, im = emu.halve(re)[0], emu.halve(im)[0]
    return re, im


# -- planning ------------------------------------------------------------------
def test_plan_r_1024():
    plan = plan_fft(1024, CrossbarDims(1024, 1024), SINGLE, FFTConfig.R())
    assert plan.sequence_columns == 64
    assert plan.log_n == 10
    assert plan.summary()["sequence_columns"] == 64


def test_plan_tworr_2048_valid():
    plan = plan_fft(2048, CrossbarDims(1024, 1024), SINGLE, FFTConfig.TwoR())
    assert plan.sequence_columns == 128 and plan.log_n == 11


@pytest.mark.parametrize(
    "n,config,kw",
    [
        (4096, FFTConfig.R(), {}),
        (1000, FFTConfig.R(), {}),
        (2048, FFTConfig.TwoRBeta(2), {}),
        (4096, FFTConfig.TwoR(), {"partitions": 2}),
    ],
)
def test_plan_geometry_errors(n, config, kw):
    with pytest.raises(ConfigurationError):
        plan_fft(n, CrossbarDims(1024, 1024), SINGLE, config, **kw)


def test_plan_footprint_overflow():
    with pytest.raises(ConfigurationError, match="footprint"):
        plan_fft(1024, CrossbarDims(1024, 128), SINGLE, FFTConfig.R())


def test_config_errors():
    with pytest.raises(ConfigurationError):
        FFTConfig("Quad")
    with pytest.raises(ConfigurationError):
        FFTConfig.TwoRBeta(3)
    with pytest.raises(ConfigurationError):
        FFTConfig("TwoR", use_partitions=True)


# -- load / read -------------------------------------------------------------------
def test_load_read_roundtrip_and_snake(rng):
    xb, plan = setup(16, FFTConfig.TwoR())
    x = cvec(rng, 16)
    load_sequence(xb, plan, x)
    assert np.array_equal(read_sequence(xb, plan, plan.input_layout), x.astype(np.complex64))
    # snake: element 3 is at row 1, slot 0
    cs = plan.columns.slot_by_index(0, 0)
    re = get_codes(xb, cs.re, [1])
    assert re[0] == SINGLE.encode(x[3].real)


def test_load_errors(rng):
    xb, plan = setup(16, FFTConfig.TwoR())
    with pytest.raises(ConfigurationError):
        load_sequence(xb, plan, cvec(rng, 15))
    with pytest.raises(ConfigurationError):
        load_sequence(xb, plan, np.r_[np.inf, np.zeros(15)])
    small = new_crossbar(CrossbarDims(4, 1024))
    with pytest.raises(CrossbarError):
        load_sequence(small, plan, cvec(rng, 16))


# -- building blocks -------------------------------------------------------------
def test_bit_reversal_permute_n8():
    xb, plan = setup(8, FFTConfig.R())
    load_sequence(xb, plan, np.arange(8))
    bit_reversal_permute(xb, plan)
    pos = plan.input_layout.with_rows(identity(3))
    assert read_sequence(xb, plan, pos).real.tolist() == [0, 4, 2, 6, 1, 5, 3, 7]
    bit_reversal_permute(xb, plan)
    assert read_sequence(xb, plan, pos).real.tolist() == list(range(8))


@pytest.mark.parametrize("name", ["TwoR", "TwoRBeta2"])
def test_bit_reversal_permute_two_slot(name, rng):
    n = 64
    xb, plan = setup(n, CONFIGS[name])
    x = cvec(rng, n)
    load_sequence(xb, plan, x)
    bit_reversal_permute(xb, plan)
    pos = plan.input_layout.with_rows(identity(6))
    assert np.array_equal(read_sequence(xb, plan, pos), x.astype(np.complex64)[bit_reverse_indices(n)])


def _slots():
    u, v, w = ComplexSlot.at(0, 32), ComplexSlot.at(64, 32), ComplexSlot.at(128, 32)
    return u, v, w, ScratchLayout(range(192, 1024))


@pytest.mark.parametrize("wval", [1.0, -1.0])
def test_butterfly_unit_twiddles(wval, rng):
    xb = new_crossbar(CrossbarDims(16, 1024))
    u, v, w, sc = _slots()
    a, b = cvec(rng, 16).astype(np.complex64), cvec(rng, 16).astype(np.complex64)
    for slot, val in ((u, a), (v, b), (w, np.full(16, wval))):
        put_codes(xb, slot.re, SINGLE.encode(val.real))
        put_codes(xb, slot.im, SINGLE.encode(val.imag))
    butterfly_rows(xb, u, v, w, fmt=SINGLE, scratch=sc)
    got_u = SINGLE.decode(get_codes(xb, u.re)) + 1j * SINGLE.decode(get_codes(xb, u.im))
    got_v = SINGLE.decode(get_codes(xb, v.re)) + 1j * SINGLE.decode(get_codes(xb, v.im))
    assert np.array_equal(got_u, (a + wval * b).astype(np.complex64))
    assert np.array_equal(got_v, (a - wval * b).astype(np.complex64))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=5)
def test_butterfly_random_vs_emulator(seed):
    rng = np.random.default_rng(seed)
    xb = new_crossbar(CrossbarDims(64, 1024))
    u, v, w, sc = _slots()
    codes = {}
    for slot in (u, v, w):
        for part in (slot.re, slot.im):
            c = SINGLE.encode(rng.standard_normal(64))
            put_codes(xb, part, c)
            codes[part.cols[0]] = c
    ur, ui, vr, vi, wr, wi = (codes[s.cols[0]] for s in (u.re, u.im, v.re, v.im, w.re, w.im))
    rows = np.arange(0, 64, 3)
    butterfly_rows(xb, u, v, w, rows, fmt=SINGLE, scratch=sc)
    emu = FormatEmulator(SINGLE)
    tr, ti = emu.complex_mul(vr, vi, wr, wi)
    assert np.array_equal(get_codes(xb, u.re, rows), emu.add(ur, tr)[0][rows])
    assert np.array_equal(get_codes(xb, u.im, rows), emu.add(ui, ti)[0][rows])
    assert np.array_equal(get_codes(xb, v.re, rows), emu.sub(ur, tr)[0][rows])
    assert np.array_equal(get_codes(xb, v.im, rows), emu.sub(ui, ti)[0][rows])
    untouched = np.setdiff1d(np.arange(64), rows)
    assert np.array_equal(get_codes(xb, v.re, untouched), vr[untouched])


def test_butterfly_out_of_place_requires_out():
    xb = new_crossbar(CrossbarDims(4, 1024))
    u, v, w, sc = _slots()
    with pytest.raises(ConfigurationError):
        butterfly_rows(xb, u, v, w, in_place=False, fmt=SINGLE, scratch=sc)


@pytest.mark.parametrize("stage", [1, 3, 5])
def test_align_restore_identity_and_pairing(stage, rng):
    n = 32
    xb, plan = setup(n, FFTConfig.R())
    load_sequence(xb, plan, cvec(rng, n))
    before = xb.state.copy()
    d = plan.columns.slot(0, 0, 0)
    p = plan.columns.slot(0, 0, 1)
    stage_align_r(xb, plan, stage)
    h = 1 << (stage - 1)
    k = plan.stages[stage - 1].pair_bit
    upper = np.arange(n)[(np.arange(n) >> k) & 1 == 0]
    # partner slot of each upper row now holds the data of the row 2^k below
    assert np.array_equal(xb.state[upper][:, list(p.cols)], before[upper + (1 << k)][:, list(d.cols)])
    assert (1 << k) == h  # identity start layout pairs rows h apart
    stage_restore_r(xb, plan, stage)
    assert np.array_equal(xb.state[:, : plan.sequence_columns], before[:, : plan.sequence_columns])


@pytest.mark.parametrize("name", ["TwoR", "TwoRBeta2", "TwoRBeta2p", "TwoRBeta4"])
def test_swap_pairs_moves_to_next_layout(name, rng):
    n = 64 * CONFIGS[name].elements_per_row // 2
    xb, plan = setup(n, CONFIGS[name])
    x = cvec(rng, n)
    for stage in range(1, plan.log_n):
        load_sequence(xb, plan, x, plan.stages[stage - 1].layout)
        swap_pairs_2r(xb, plan, stage)
        assert np.array_equal(read_sequence(xb, plan, plan.stages[stage].layout), x.astype(np.complex64))
    with pytest.raises(ConfigurationError):
        swap_pairs_2r(xb, plan, plan.log_n)


def test_r_only_helpers_reject_two_slot():
    xb, plan = setup(16, FFTConfig.TwoR())
    with pytest.raises(ConfigurationError):
        stage_align_r(xb, plan, 1)
    xr, pr = setup(16, FFTConfig.R())
    with pytest.raises(ConfigurationError):
        swap_pairs_2r(xr, pr, 1)


# -- full transform ------------------------------------------------------------------
@pytest.mark.parametrize("name", list(CONFIGS))
def test_fft_bit_exact_vs_emulator(name, rng):
    n = 64 if name != "TwoRBeta4" else 128
    xb, plan = setup(n, CONFIGS[name])
    x = cvec(rng, n)
    load_sequence(xb, plan, x)
    stats = {}
    run_fft(xb, plan, stats)
    re, im = read_codes(xb, plan)
    want_re, want_im = emulated_fft(x, SINGLE)
    assert np.array_equal(re, want_re) and np.array_equal(im, want_im)
    assert relative_l2(read_sequence(xb, plan), host_fft(x)) <= 1e-5
    assert len(stats["stages"]) == plan.log_n


@pytest.mark.parametrize("name", ["R", "TwoR", "TwoRBeta2p"])
def test_fft_delta_and_constant(name):
    n = 32
    xb, plan = setup(n, CONFIGS[name])
    delta = np.zeros(n)
    delta[0] = 1
    load_sequence(xb, plan, delta)
    run_fft(xb, plan)
    assert np.array_equal(read_sequence(xb, plan), np.ones(n, dtype=complex))
    xb, plan = setup(n, CONFIGS[name])
    load_sequence(xb, plan, np.full(n, 0.75 - 0.5j))
    run_fft(xb, plan)
    want = np.zeros(n, dtype=complex)
    want[0] = n * (0.75 - 0.5j)
    assert np.array_equal(read_sequence(xb, plan), want)


@pytest.mark.parametrize("name", ["R", "TwoR", "TwoRBeta2"])
def test_skip_permutation_same_codes(name, rng):
    n = 64
    x = cvec(rng, n)
    out = []
    for skip in (False, True):
        xb, plan = setup(n, CONFIGS[name], skip_input_permutation=skip)
        load_sequence(xb, plan, x)
        t = run_fft(xb, plan)
        out.append((read_codes(xb, plan), t))
    assert all(np.array_equal(a, b) for a, b in zip(out[0][0], out[1][0]))
    assert out[1][1].cycles < out[0][1].cycles


def test_inverse_of_ones_and_roundtrip(rng):
    n = 64
    xb, plan = setup(n, FFTConfig.TwoR(), direction="inverse")
    load_sequence(xb, plan, np.ones(n))
    run_inverse_fft(xb, plan)
    delta = np.zeros(n, dtype=complex)
    delta[0] = 1
    assert np.array_equal(read_sequence(xb, plan), delta)

    x = cvec(rng, n)
    xf, pf = setup(n, FFTConfig.TwoR())
    load_sequence(xf, pf, x)
    run_fft(xf, pf)
    X = read_sequence(xf, pf)
    xi, pi = setup(n, FFTConfig.TwoR(), direction="inverse")
    load_sequence(xi, pi, X)
    run_inverse_fft(xi, pi)
    assert relative_l2(read_sequence(xi, pi), x) <= 1e-5
    re, im = read_codes(xi, pi)
    want_re, want_im = emulated_fft(X, SINGLE, "inverse")
    assert np.array_equal(re, want_re) and np.array_equal(im, want_im)
    assert relative_l2(read_sequence(xi, pi), host_ifft(X)) <= 1e-5


def test_inverse_needs_inverse_plan():
    xb, plan = setup(8, FFTConfig.TwoR())
    with pytest.raises(ConfigurationError):
        run_inverse_fft(xb, plan)


def test_n_equals_one():
    xb, plan = setup(1, FFTConfig.R())
    load_sequence(xb, plan, [2.5 - 1j])
    t = run_fft(xb, plan)
    assert read_sequence(xb, plan).tolist() == [2.5 - 1j]
    assert t.cycles == 0


def test_half_precision_bit_exact(rng):
    n = 64
    xb, plan = setup(n, FFTConfig.TwoR(), HALF)
    x = cvec(rng, n) / 4
    load_sequence(xb, plan, x)
    run_fft(xb, plan)
    re, im = read_codes(xb, plan)
    want_re, want_im = emulated_fft(x, HALF)
    assert np.array_equal(re, want_re) and np.array_equal(im, want_im)


def test_cycles_are_data_independent(rng):
    traces = []
    for x in (cvec(rng, 32), np.zeros(32), np.full(32, 1e30)):
        xb, plan = setup(32, FFTConfig.TwoR())
        load_sequence(xb, plan, x)
        traces.append(run_fft(xb, plan).cycles)
    assert len(set(traces)) == 1


def test_two_slot_stage_costs_at_most_r_stage_plus_swap(rng):
    n = 64
    per_cfg = {}
    for name in ("R", "TwoR"):
        xb, plan = setup(n, CONFIGS[name])
        load_sequence(xb, plan, cvec(rng, n))
        stats = {}
        run_fft(xb, plan, stats)
        per_cfg[name] = stats
    r_stage = per_cfg["R"]["stages"]
    two_stage = per_cfg["TwoR"]["stages"]
    # the same arithmetic, only the data movement differs
    assert per_cfg["R"]["butterfly"].cycles == per_cfg["TwoR"]["butterfly"].cycles
    swap_max = max(s.cycles for s in two_stage) - per_cfg["TwoR"]["butterfly"].cycles // n.bit_length()
    for a, b in zip(r_stage, two_stage):
        assert b.cycles <= a.cycles + swap_max
