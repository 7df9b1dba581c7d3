"""Radix-2 decimation-in-time FFT executed on the crossbar.

Stage ``s`` (``h = 2^(s-1)``) combines positions ``j`` and ``j + h`` (bit
``s-1`` of ``j`` clear) with twiddle ``w_{2h}^(j mod h)``. Positions live where
the plan's stage layout puts them:

* R: one element per row; the partner rows are shifted right and up into the
  partner slot, butterflies run on the ``r/2`` upper rows, then everything is
  shifted back.
* TwoR / TwoRBeta: the two partners of a pair share a row and a unit (side 0
  and side 1); between stages the layout is changed by exchanges of the side
  bit with a row bit or unit bit. Units run one after another, or all at once
  when each unit owns a partition.

The inverse transform uses conjugated twiddles and finishes with ``log2 n``
exponent decrements of every element.
"""

from __future__ import annotations

import numpy as np

from ..arith import ops
from ..arith.formats import ComplexSlot, NumberFormat, ScratchLayout, bits_to_codes, codes_to_bits
from ..crossbar import ConfigurationError, Crossbar, CrossbarError, Trace
from ..oracle import bit_reverse_indices
from . import movement
from .layout import Layout, identity
from .plan import FFTPlan

CATEGORIES = ("permutation", "movement", "twiddle", "butterfly", "scale")


class _Phase:
    """Accumulate the trace delta of a block into ``stats[name]``."""

    def __init__(self, xb: Crossbar, stats: dict | None, name: str):
        self.xb, self.stats, self.name = xb, stats, name

    def __enter__(self):
        self.before = self.xb.trace.copy()

    def __exit__(self, *exc):
        if self.stats is not None and exc[0] is None:
            d = self.xb.trace - self.before
            self.stats[self.name] = self.stats.get(self.name, Trace()) + d


def _check_xbar(xb: Crossbar, plan: FFTPlan) -> None:
    if (xb.rows, xb.cols) != (plan.dims.rows, plan.dims.cols):
        raise CrossbarError(f"plan is for {plan.dims.rows}x{plan.dims.cols}, crossbar is {xb.rows}x{xb.cols}")
    if plan.columns.partitioned:
        want = tuple((i * plan.columns.block, (i + 1) * plan.columns.block) for i in range(plan.partitions))
        if xb.partitions.boundaries != want:
            raise CrossbarError(f"plan needs {plan.partitions} equal partitions")


def _slots(plan: FFTPlan) -> list[ComplexSlot]:
    cm, q = plan.columns, plan.region
    S = 1 if plan.config.variant == "R" else 2 * plan.config.units
    return [cm.slot_by_index(q, s) for s in range(S)]


def _move_scratch(plan: FFTPlan) -> tuple[int, ...]:
    return plan.columns.scratch(0).cols


# -- host I/O -------------------------------------------------------------------
def load_sequence(xb: Crossbar, plan: FFTPlan, values, layout: Layout | None = None) -> None:
    """Round ``values`` to the plan format and place them per ``layout`` (untimed)."""
    _check_xbar(xb, plan)
    v = np.asarray(values, dtype=np.complex128).reshape(-1)
    if v.size != plan.n:
        raise ConfigurationError(f"expected {plan.n} values, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ConfigurationError("values must be finite")
    layout = layout or plan.input_layout
    fmt = plan.fmt
    bits = np.concatenate([codes_to_bits(fmt.encode(v.real), fmt.bits), codes_to_bits(fmt.encode(v.imag), fmt.bits)], axis=1)
    row, slot = layout.locate(np.arange(plan.n))
    for s, cs in enumerate(_slots(plan)):
        sel = slot == s
        if np.any(sel):
            xb.load_region(row[sel], list(cs.cols), bits[sel])


def read_codes(xb: Crossbar, plan: FFTPlan, layout: Layout | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Raw (real, imaginary) codes in logical order (host read, untimed)."""
    layout = layout or plan.output_layout
    N = plan.fmt.bits
    row, slot = layout.locate(np.arange(plan.n))
    re = np.zeros(plan.n, dtype=np.uint64)
    im = np.zeros(plan.n, dtype=np.uint64)
    for s, cs in enumerate(_slots(plan)):
        sel = np.flatnonzero(slot == s)
        if sel.size:
            b = xb.read_region(row[sel], list(cs.cols))
            re[sel] = bits_to_codes(b[:, :N])
            im[sel] = bits_to_codes(b[:, N:])
    return re, im


def read_sequence(xb: Crossbar, plan: FFTPlan, layout: Layout | None = None) -> np.ndarray:
    re, im = read_codes(xb, plan, layout)
    return plan.fmt.decode(re) + 1j * plan.fmt.decode(im)


# -- permutation ----------------------------------------------------------------
def move_sequence(xb: Crossbar, plan: FFTPlan, src: Layout, dst: Layout, mapping=None) -> None:
    """Physically move element ``i`` from ``src`` placement to ``dst`` placement of ``mapping[i]``."""
    idx = np.arange(plan.n)
    tgt = idx if mapping is None else np.asarray(mapping)
    sr, ss = src.locate(idx)
    dr, ds = dst.locate(tgt)
    movement.permute_grid(xb, [c.cols for c in _slots(plan)], sr, ss, dr, ds, _move_scratch(plan))


def bit_reversal_permute(xb: Crossbar, plan: FFTPlan) -> None:
    """Move the element at index ``j`` to index ``rev(j)``: afterwards position ``p`` holds ``x[rev(p)]``.

    Elements are read from ``plan.input_layout``; positions are placed by the
    identity layout (index bits map to address bits in order).
    """
    _check_xbar(xb, plan)
    if plan.n < 2:
        return
    rev = bit_reverse_indices(plan.n)
    target = plan.input_layout.with_rows(identity(plan.input_layout.L))
    move_sequence(xb, plan, plan.input_layout, target, rev)


# -- butterflies ----------------------------------------------------------------
def butterfly_rows(
    xb: Crossbar,
    u: ComplexSlot,
    v: ComplexSlot,
    w: ComplexSlot,
    rows=None,
    in_place: bool = True,
    *,
    fmt: NumberFormat,
    scratch: ScratchLayout,
    out: tuple[ComplexSlot, ComplexSlot] | None = None,
    offsets=(0,),
) -> None:
    """``t = w v``; ``(u, v) <- (u + t, u - t)`` on every selected row.

    The product goes to a ``2N``-column temporary at the front of ``scratch``.
    With ``in_place=False`` the results go to ``out = (u_out, v_out)``.
    """
    if in_place:
        ou, ov = u, v
    else:
        if out is None:
            raise ConfigurationError("out slots required when in_place is False")
        ou, ov = out
    wc = 2 * fmt.bits
    sc = scratch.cols
    if len(sc) < wc or sc[wc - 1] != sc[0] + wc - 1:
        raise ConfigurationError("butterfly needs a contiguous 2N-column temporary at the front of scratch")
    t = ComplexSlot.at(sc[0], fmt.bits)
    for s in (u, v, w, ou, ov):
        scratch.check_disjoint(s)
    rest = ScratchLayout(sc[wc:])
    kw = dict(fmt=fmt, scratch=rest, offsets=offsets)
    ops.complex_mul(xb, v, w, t, rows, **kw)
    ops.complex_sub(xb, u, t, ov, rows, **kw)
    ops.complex_add(xb, u, t, ou, rows, **kw)


def _write_twiddles(xb: Crossbar, plan: FFTPlan, stage: int, unit: int, rows) -> None:
    st = plan.stages[stage - 1]
    tw = plan.twiddles
    t = st.twiddle_index[unit][rows]
    N = plan.fmt.bits
    vals = np.concatenate([codes_to_bits(tw.re[stage - 1][t], N), codes_to_bits(tw.im[stage - 1][t], N)], axis=1)
    xb.write_columns(plan.columns.twiddle(unit).cols, vals, rows)


# -- R-config alignment -----------------------------------------------------------
def _r_rows(xb: Crossbar, plan: FFTPlan, stage: int):
    k = plan.stages[stage - 1].pair_bit
    rows = np.arange(xb.rows, dtype=np.int64)
    upper = rows[((rows >> k) & 1) == 0]
    return upper, upper + (1 << k)


def stage_align_r(xb: Crossbar, plan: FFTPlan, stage: int) -> None:
    """Shift the partner half right (into the partner slot) and up, one pair per row."""
    if plan.config.variant != "R":
        raise ConfigurationError("stage_align_r applies to R-config plans")
    upper, lower = _r_rows(xb, plan, stage)
    D, P = plan.columns.slot(plan.region, 0, 0).cols, plan.columns.slot(plan.region, 0, 1).cols
    movement.col_not(xb, list(zip(D, P)), lower)
    movement.row_moves(xb, [(int(b), int(a), P) for a, b in zip(upper, lower)])


def stage_restore_r(xb: Crossbar, plan: FFTPlan, stage: int) -> None:
    """Shift the partner slot down and back left."""
    if plan.config.variant != "R":
        raise ConfigurationError("stage_restore_r applies to R-config plans")
    upper, lower = _r_rows(xb, plan, stage)
    D, P = plan.columns.slot(plan.region, 0, 0).cols, plan.columns.slot(plan.region, 0, 1).cols
    movement.row_moves(xb, [(int(a), int(b), P) for a, b in zip(upper, lower)])
    movement.col_not(xb, list(zip(P, D)), lower)


# -- two-slot transitions ---------------------------------------------------------
def apply_steps(xb: Crossbar, plan: FFTPlan, steps) -> None:
    """Execute layout-transition steps (see :func:`pimfft.fft.layout.plan_transition`)."""
    cm, q = plan.columns, plan.region
    U = plan.config.units
    ub = U.bit_length() - 1
    sc = _move_scratch(plan)
    wc = cm.wc

    def unit_pairs(b):
        return [(u, u | (1 << b)) for u in range(U) if not (u >> b) & 1]

    def vexchange(bit, p_side, q_side):
        P = [cm.slot(q, u, p_side).cols for u in range(U)]
        Q = [cm.slot(q, u, q_side).cols for u in range(U)]
        if cm.partitioned:
            scr = [cm.scratch(u).cols for u in range(U)]
            movement.vertical_exchange(xb, P, Q, bit, scr)
            return
        per = max(1, (len(sc) - wc) // (2 * wc))
        for i in range(0, U, per):
            batch = range(i, min(U, i + per))
            scr = [sc[2 * wc * j : 2 * wc * (j + 1)] + sc[2 * wc * len(batch) : 2 * wc * len(batch) + wc] for j in range(len(batch))]
            movement.vertical_exchange(xb, [P[u] for u in batch], [Q[u] for u in batch], bit, scr)

    for step in steps:
        kind = step[0]
        if kind in ("xchg", "xor_into"):
            k = step[1]
            q_side = 0 if kind == "xchg" else 1
            if k <= ub:
                for a, b in unit_pairs(k - 1):
                    movement.swap_regions(xb, cm.slot(q, a, 1).cols, cm.slot(q, b, q_side).cols, None, sc)
            else:
                vexchange(k - 1 - ub, 1, q_side)
        elif kind == "flip":
            ks = step[1]
            umask = sum(1 << (k - 1) for k in ks if k <= ub)
            rmask = sum(1 << (k - 1 - ub) for k in ks if k > ub)
            rows = np.arange(xb.rows, dtype=np.int64)
            rpar = np.bitwise_count(rows & rmask) & 1
            for u in range(U):
                upar = bin(u & umask).count("1") & 1
                sel = rows[rpar ^ upar == 1]
                if sel.size:
                    movement.swap_regions(xb, cm.slot(q, u, 0).cols, cm.slot(q, u, 1).cols, sel, sc)
        else:
            raise ValueError(f"unknown step {step!r}")


def swap_pairs_2r(xb: Crossbar, plan: FFTPlan, stage: int) -> None:
    """Transition a two-slot layout from ``stage`` to ``stage + 1``."""
    if plan.config.variant == "R":
        raise ConfigurationError("swap_pairs_2r applies to two-slot layouts")
    if not 1 <= stage < plan.log_n:
        raise ConfigurationError(f"no transition after stage {stage}")
    apply_steps(xb, plan, plan.stages[stage].steps)


# -- driver ------------------------------------------------------------------------
def _stage_butterflies(xb: Crossbar, plan: FFTPlan, s: int, stats) -> None:
    cm, q, fmt = plan.columns, plan.region, plan.fmt
    if plan.config.variant == "R":
        upper, _ = _r_rows(xb, plan, s)
        with _Phase(xb, stats, "twiddle"):
            _write_twiddles(xb, plan, s, 0, upper)
        with _Phase(xb, stats, "butterfly"):
            butterfly_rows(xb, cm.slot(q, 0, 0), cm.slot(q, 0, 1), cm.twiddle(0), upper, fmt=fmt, scratch=cm.scratch(0))
        return
    allrows = np.arange(xb.rows)
    U = plan.config.units
    if cm.partitioned:
        with _Phase(xb, stats, "twiddle"):
            for u in range(U):
                _write_twiddles(xb, plan, s, u, allrows)
        offs = tuple(cm.offset(u) for u in range(U))
        with _Phase(xb, stats, "butterfly"):
            butterfly_rows(xb, cm.slot(q, 0, 0), cm.slot(q, 0, 1), cm.twiddle(0), None, fmt=fmt, scratch=cm.scratch(0), offsets=offs)
        return
    for u in range(U):
        with _Phase(xb, stats, "twiddle"):
            _write_twiddles(xb, plan, s, u, allrows)
        with _Phase(xb, stats, "butterfly"):
            butterfly_rows(xb, cm.slot(q, u, 0), cm.slot(q, u, 1), cm.twiddle(0), None, fmt=fmt, scratch=cm.scratch(0))


def scale_by_n(xb: Crossbar, plan: FFTPlan) -> None:
    """Divide every element by ``n`` with ``log2 n`` exponent decrements."""
    cm, q, fmt = plan.columns, plan.region, plan.fmt
    if plan.config.variant == "R":
        targets = [(cm.slot(q, 0, 0), (0,), cm.scratch(0))]
    elif cm.partitioned:
        offs = tuple(cm.offset(u) for u in range(plan.config.units))
        targets = [(cm.slot(q, 0, side), offs, cm.scratch(0)) for side in (0, 1)]
    else:
        targets = [(cm.slot(q, u, side), (0,), cm.scratch(0)) for u in range(plan.config.units) for side in (0, 1)]
    for _ in range(plan.log_n):
        for slot, offs, scr in targets:
            ops.halve(xb, slot, None, fmt=fmt, scratch=scr, offsets=offs)


def run_fft(xb: Crossbar, plan: FFTPlan, stats: dict | None = None) -> Trace:
    """Transform the stored sequence in place; returns the trace delta.

    :param stats: optional dict filled with per-category traces
        (``permutation``, ``movement``, ``twiddle``, ``butterfly``, ``scale``)
        and ``stages``, a list with the trace of every butterfly group.
    """
    _check_xbar(xb, plan)
    before = xb.trace.copy()
    if stats is not None:
        stats.setdefault("stages", [])
    if not plan.skip_input_permutation and plan.n > 1:
        with _Phase(xb, stats, "permutation"):
            bit_reversal_permute(xb, plan)
    for st in plan.stages:
        s = st.index
        t0 = xb.trace.copy()
        if plan.config.variant == "R":
            with _Phase(xb, stats, "movement"):
                stage_align_r(xb, plan, s)
            _stage_butterflies(xb, plan, s, stats)
            with _Phase(xb, stats, "movement"):
                stage_restore_r(xb, plan, s)
        else:
            with _Phase(xb, stats, "movement"):
                apply_steps(xb, plan, st.steps)
            _stage_butterflies(xb, plan, s, stats)
        if stats is not None:
            stats["stages"].append(xb.trace - t0)
    if plan.direction == "inverse":
        with _Phase(xb, stats, "scale"):
            scale_by_n(xb, plan)
    return xb.trace - before


def run_inverse_fft(xb: Crossbar, plan: FFTPlan, stats: dict | None = None) -> Trace:
    """Inverse transform (conjugated twiddles, then ``1/n`` by exponent decrements)."""
    if plan.direction != "inverse":
        raise ConfigurationError("run_inverse_fft needs a plan with direction='inverse'")
    return run_fft(xb, plan, stats)
