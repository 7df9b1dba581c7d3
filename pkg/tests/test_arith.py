import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pimfft import ConfigurationError, CrossbarDims, CrossbarError, new_crossbar
from pimfft.arith import (
    HALF,
    SINGLE,
    ComplexSlot,
    NumberFormat,
    RealSlot,
    ScratchLayout,
    add_fixed,
    add_float,
    complex_add,
    complex_mul,
    complex_sub,
    conjugate_in_place,
    copy_slot,
    halve,
    mul_by_i,
    mul_fixed,
    mul_float,
    schedule_table,
    sub_fixed,
    sub_float,
    swap_slots,
)
from pimfft.oracle import FormatEmulator

from conftest import get_codes, join, put_codes

FIX16 = NumberFormat.fixed(16)
FIX8 = NumberFormat.fixed(8)
FLOAT_OPS = {"add": add_float, "sub": sub_float, "mul": mul_float}


def random_float_codes(rng, fmt, size):
    """Uniform sign and mantissa, exponent field in [0, max - 1] (no all-ones exponent)."""
    s = rng.integers(0, 2, size)
    e = rng.integers(0, fmt.exp_max_field, size)
    m = rng.integers(0, 1 << fmt.man_bits, size)
    return ((s << (fmt.bits - 1)) | (e << fmt.man_bits) | m).astype(np.uint64)


def binary(op, fmt, x, y):
    n = fmt.bits
    a, b, o = RealSlot(0, n), RealSlot(n, n), RealSlot(2 * n, n)
    xb = new_crossbar(CrossbarDims(len(x), 3 * n + 320))
    put_codes(xb, a, x)
    put_codes(xb, b, y)
    op(xb, a, b, o, fmt=fmt)
    return get_codes(xb, o), xb


# -- fixed point -------------------------------------------------------------------
def test_fixed_examples():
    out, _ = binary(add_fixed, FIX16, FIX16.encode([3, 0x7FFF]), FIX16.encode([5, 1]))
    assert out.tolist() == [8, 0x8000]
    out, _ = binary(mul_fixed, FIX16, FIX16.encode([3]), FIX16.encode([5]))
    assert out.tolist() == [15]


def test_fixed_random_pairs_vs_host(rng):
    x = rng.integers(0, 1 << 16, 10_000).astype(np.uint64)
    y = rng.integers(0, 1 << 16, 10_000).astype(np.uint64)
    for op, host in ((add_fixed, x + y), (sub_fixed, x - y), (mul_fixed, x * y)):
        out, _ = binary(op, FIX16, x, y)
        assert np.array_equal(out, host & np.uint64(0xFFFF)), op.__name__


def test_mul_fixed_annihilator(rng):
    x = rng.integers(0, 1 << 16, 100).astype(np.uint64)
    out, _ = binary(mul_fixed, FIX16, x, np.zeros(100, dtype=np.uint64))
    assert not out.any()


def test_mul_fixed_exhaustive_8bit():
    a, b = np.meshgrid(np.arange(256, dtype=np.uint64), np.arange(256, dtype=np.uint64))
    out, _ = binary(mul_fixed, FIX8, a.ravel(), b.ravel())
    assert np.array_equal(out, (a.ravel() * b.ravel()) & np.uint64(0xFF))


# -- floating point ---------------------------------------------------------------
def test_float_examples(rng):
    out, _ = binary(add_float, SINGLE, SINGLE.encode([1.5]), SINGLE.encode([2.5]))
    assert SINGLE.decode(out).tolist() == [4.0]
    x = SINGLE.encode(rng.uniform(-1e6, 1e6, 64))
    out, _ = binary(mul_float, SINGLE, SINGLE.encode(np.ones(64)), x)
    assert np.array_equal(out, x)


@pytest.mark.parametrize("fmt", [SINGLE, HALF], ids=["single", "half"])
@pytest.mark.parametrize("name", ["add", "sub", "mul"])
def test_float_random_pairs_bit_exact(fmt, name):
    rng = np.random.default_rng(hash((fmt.bits, name)) & 0xFFFF)
    x = random_float_codes(rng, fmt, 100_000)
    y = random_float_codes(rng, fmt, 100_000)
    out, xb = binary(FLOAT_OPS[name], fmt, x, y)
    want, flags = getattr(FormatEmulator(fmt), name)(x, y)
    assert np.array_equal(out, want)
    for k in ("underflow", "overflow"):
        assert xb.trace.flags[k] == flags[k]


def test_special_input_flagged():
    e = np.uint64(SINGLE.exp_max_field << SINGLE.man_bits)
    _, xb = binary(add_float, SINGLE, np.array([e, 0], dtype=np.uint64), SINGLE.encode([1.0, 1.0]))
    assert xb.trace.flags["special_input"] == 1


def test_float_cycles_independent_of_rows():
    _, one = binary(add_float, SINGLE, SINGLE.encode([1.0]), SINGLE.encode([2.0]))
    _, many = binary(add_float, SINGLE, SINGLE.encode(np.ones(1024)), SINGLE.encode(np.ones(1024)))
    assert one.trace.cycles == many.trace.cycles == schedule_table(SINGLE)["add_float"]["cycles"]


def test_element_parallel_no_cross_row_contamination(rng):
    x = random_float_codes(rng, SINGLE, 256)
    y = random_float_codes(rng, SINGLE, 256)
    perm = rng.permutation(256)
    out, _ = binary(mul_float, SINGLE, x, y)
    out_p, _ = binary(mul_float, SINGLE, x[perm], y[perm])
    assert np.array_equal(out[perm], out_p)


def test_row_subset_leaves_other_rows(rng):
    n = 32
    a, b, o = RealSlot(0, n), RealSlot(n, n), RealSlot(2 * n, n)
    xb = new_crossbar(CrossbarDims(64, 512))
    put_codes(xb, a, random_float_codes(rng, SINGLE, 64))
    put_codes(xb, b, random_float_codes(rng, SINGLE, 64))
    before = xb.state
    rows = np.arange(0, 64, 3)
    add_float(xb, a, b, o, rows)
    other = np.setdiff1d(np.arange(64), rows)
    assert np.array_equal(xb.state[other][:, : 3 * n], before[other][:, : 3 * n])


# -- complex ------------------------------------------------------------------------
def complex_xbar(rows, fmt=SINGLE):
    n = fmt.bits
    return new_crossbar(CrossbarDims(rows, 6 * n + 400)), [ComplexSlot.at(k * 2 * n, n) for k in range(3)]


def put_complex(xb, slot, z, fmt=SINGLE):
    z = np.asarray(z, dtype=np.complex128)
    put_codes(xb, slot, join(fmt.encode(z.real), fmt.encode(z.imag), fmt.bits))


def get_complex(xb, slot, fmt=SINGLE):
    c = get_codes(xb, slot)
    mask = np.uint64((1 << fmt.bits) - 1)
    return fmt.decode(c & mask) + 1j * fmt.decode(c >> np.uint64(fmt.bits)), c


def test_complex_examples():
    xb, (a, b, o) = complex_xbar(1)
    put_complex(xb, a, [1 + 2j])
    put_complex(xb, b, [3 + 4j])
    complex_add(xb, a, b, o)
    assert get_complex(xb, o)[0].tolist() == [4 + 6j]
    complex_mul(xb, a, b, o)
    assert get_complex(xb, o)[0].tolist() == [-5 + 10j]
    complex_sub(xb, a, a, o)
    assert get_complex(xb, o)[0].tolist() == [0j]


def test_complex_mul_identity(rng):
    z = rng.uniform(-10, 10, 32) + 1j * rng.uniform(-10, 10, 32)
    xb, (a, b, o) = complex_xbar(32)
    put_complex(xb, a, z)
    put_complex(xb, b, np.ones(32))
    complex_mul(xb, a, b, o)
    assert np.array_equal(get_codes(xb, o), get_codes(xb, a))


@pytest.mark.parametrize("fmt", [SINGLE, HALF], ids=["single", "half"])
def test_complex_random_bit_exact(fmt, rng):
    n, rows = fmt.bits, 2000
    xb, (a, b, o) = complex_xbar(rows, fmt)
    ar, ai, br, bi = (random_float_codes(rng, fmt, rows) for _ in range(4))
    put_codes(xb, a, join(ar, ai, n))
    put_codes(xb, b, join(br, bi, n))
    emu = FormatEmulator(fmt)
    mask = np.uint64((1 << n) - 1)
    complex_mul(xb, a, b, o, fmt=fmt)
    c = get_codes(xb, o)
    re, im = emu.complex_mul(ar, ai, br, bi)
    assert np.array_equal(c & mask, re) and np.array_equal(c >> np.uint64(n), im)
    for op, name in ((complex_add, "add"), (complex_sub, "sub")):
        op(xb, a, b, o, fmt=fmt)
        c = get_codes(xb, o)
        assert np.array_equal(c & mask, getattr(emu, name)(ar, br)[0])
        assert np.array_equal(c >> np.uint64(n), getattr(emu, name)(ai, bi)[0])


def test_complex_mul_in_place_alias(rng):
    z, w = rng.uniform(-1, 1, (2, 16)) + 1j * rng.uniform(-1, 1, (2, 16))
    xb, (a, b, o) = complex_xbar(16)
    put_complex(xb, a, z)
    put_complex(xb, b, w)
    complex_mul(xb, a, b, o)
    ref = get_codes(xb, o)
    complex_mul(xb, a, b, a)
    assert np.array_equal(get_codes(xb, a), ref)


# -- shortcuts -------------------------------------------------------------------------
def test_conjugate():
    xb, (a, _, _) = complex_xbar(2)
    put_complex(xb, a, [3 + 4j, 1 + 0j])
    orig = get_codes(xb, a)
    conjugate_in_place(xb, a)
    vals, codes = get_complex(xb, a)
    assert vals.tolist() == [3 - 4j, 1 + 0j]
    assert int(codes[1] >> np.uint64(32)) == 1 << 31  # +0 imaginary becomes -0
    assert xb.trace.cycles == schedule_table(SINGLE)["conjugate"]["cycles"]
    conjugate_in_place(xb, a)
    assert np.array_equal(get_codes(xb, a), orig)


def test_conjugate_negative_zero_becomes_positive():
    xb, (a, _, _) = complex_xbar(1)
    put_codes(xb, a, join(SINGLE.encode([2.0]), np.array([1 << 31], dtype=np.uint64), 32))
    conjugate_in_place(xb, a)
    im = get_codes(xb, a) >> np.uint64(32)
    assert im.tolist() == [0]


def test_mul_by_i(rng):
    xb, (a, b, _) = complex_xbar(64)
    put_complex(xb, a, [1 + 0j] + list(rng.uniform(-1, 1, 63) + 1j * rng.uniform(-1, 1, 63)))
    orig, vals = get_codes(xb, a), get_complex(xb, a)[0]
    mul_by_i(xb, a)
    got = get_complex(xb, a)[0]
    assert got[0] == 1j
    assert np.array_equal(got, 1j * vals)
    for _ in range(3):
        mul_by_i(xb, a)
    assert np.array_equal(get_codes(xb, a), orig)
    mul_by_i(xb, a, out=b)
    assert np.array_equal(get_complex(xb, b)[0], 1j * vals)


def test_halve_examples():
    n = 32
    xb = new_crossbar(CrossbarDims(3, 256))
    s = RealSlot(0, n)
    min_normal = np.uint64(1 << SINGLE.man_bits)
    put_codes(xb, s, np.array([SINGLE.encode(4.0), 0, min_normal], dtype=np.uint64))
    halve(xb, s, fmt=SINGLE)
    assert SINGLE.decode(get_codes(xb, s)).tolist() == [2.0, 0.0, 0.0]
    assert xb.trace.flags["underflow"] == 1


@given(st.floats(allow_nan=False, allow_infinity=False, width=32))
def test_halve_equals_times_half(x):
    code = SINGLE.encode([x])
    want = SINGLE.decode(code) * 0.5
    if want[0] != 0 and abs(want[0]) < 2.0 ** -126:
        return
    xb = new_crossbar(CrossbarDims(1, 128))
    s = RealSlot(0, 32)
    put_codes(xb, s, code)
    halve(xb, s, fmt=SINGLE)
    assert SINGLE.decode(get_codes(xb, s))[0] == want[0]


def test_copy_and_swap(rng):
    xb, (a, b, _) = complex_xbar(32)
    za = rng.uniform(-1, 1, 32) + 0j
    zb = rng.uniform(-1, 1, 32) * 1j
    put_complex(xb, a, za)
    put_complex(xb, b, zb)
    ca, cb = get_codes(xb, a), get_codes(xb, b)
    swap_slots(xb, a, b)
    assert np.array_equal(get_codes(xb, a), cb) and np.array_equal(get_codes(xb, b), ca)
    swap_slots(xb, a, b)
    assert np.array_equal(get_codes(xb, a), ca)
    copy_slot(xb, a, b)
    assert np.array_equal(get_codes(xb, b), ca)


def test_scratch_overlap_rejected():
    xb, (a, b, o) = complex_xbar(4)
    with pytest.raises(ConfigurationError):
        complex_add(xb, a, b, o, scratch=ScratchLayout(tuple(range(0, 200))))
    with pytest.raises((ConfigurationError, CrossbarError)):
        add_float(xb, RealSlot(0, 32), RealSlot(32, 16), RealSlot(64, 32))


def test_schedule_table_published():
    for fmt in (SINGLE, HALF):
        tab = schedule_table(fmt)
        for op in ("add_float", "sub_float", "mul_float", "complex_mul", "conjugate", "mul_by_i", "copy", "swap"):
            assert tab[op]["cycles"] > 0 and tab[op]["scratch_columns"] >= 0
        assert tab["complex_mul"]["cycles"] == 4 * tab["mul_float"]["cycles"] + 2 * tab["add_float"]["cycles"]
