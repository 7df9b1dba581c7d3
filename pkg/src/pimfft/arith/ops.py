"""Crossbar-facing element-parallel arithmetic.

Every operation runs the same gate schedule in all selected rows, so its
cycle count is independent of the number of rows. Schedules are built once
per (operation, format, column placement) and cached. Outputs are written
only after every input bit has been read, so ``out`` may alias an input.

Each call appends an ``("arith", op, fmt, inputs, outputs, mask, offsets)``
record to the crossbar log (gate-level records are suppressed) so that
:func:`pimfft.oracle.replay_sequence` can re-execute the arithmetic.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .. import kernels
from ..crossbar import ConfigurationError, Crossbar, CrossbarError, Program
from ..kernels import OP_NOT
from . import fixed, floating
from .circuit import Circuit
from .formats import SINGLE, ComplexSlot, NumberFormat, RealSlot, ScratchLayout

_CACHE: dict = {}

Slot = RealSlot | ComplexSlot


def clear_cache() -> None:
    _CACHE.clear()


def default_scratch(xb: Crossbar, *slots: Slot) -> ScratchLayout:
    """Columns after the highest operand column up to the end of its partition."""
    hi = max(max(s.cols) for s in slots)
    stop = xb.partitions.boundaries[xb.partitions.index_of(hi)][1]
    return ScratchLayout.span(hi + 1, stop)


def _program(key, scratch: ScratchLayout, anchor: int, build: Callable[[Circuit], None]) -> Program:
    full = key + (scratch.cols,)
    prog = _CACHE.get(full)
    if prog is None:
        c = Circuit(scratch.cols, anchor, name=key[0])
        build(c)
        prog = c.program()
        _CACHE[full] = prog
    return prog


def _special_rows(xb: Crossbar, fmt: NumberFormat, slots: Sequence[RealSlot], mask, offsets) -> int:
    """Rows whose operand has an all-ones exponent (checked host-side, free)."""
    if not fmt.is_float:
        return 0
    m, e = fmt.man_bits, fmt.exp_bits
    total = 0
    for s in slots:
        for off in offsets:
            cols = np.arange(s.base + m, s.base + m + e) + off
            words = np.bitwise_and.reduce(xb.bits[cols], axis=0) & mask
            total += int(kernels.popcount_rows(words))
    return total


def _run(xb: Crossbar, op: str, fmt: NumberFormat, ins: Sequence[RealSlot], out: RealSlot, prog: Program, rows, offsets):
    mask, _ = xb.mask_for(rows)
    offsets = tuple(offsets)
    special = _special_rows(xb, fmt, ins, mask, offsets) if op in _FLOAT_OPS else 0
    with xb.quiet():
        xb.run_program(prog, mask, offsets)
    if special:
        xb.trace.flags["special_input"] += special
    xb._record(("arith", op, fmt, tuple(s.cols for s in ins), out.cols, mask.copy(), offsets))


def _check_widths(fmt: NumberFormat, *slots: RealSlot) -> None:
    for s in slots:
        if s.width != fmt.bits:
            raise ConfigurationError(f"slot width {s.width} does not match {fmt.name} ({fmt.bits} bits)")


def _scratch(xb, scratch, *slots):
    scratch = scratch if scratch is not None else default_scratch(xb, *slots)
    scratch.check_disjoint(*slots)
    return scratch


# -- real arithmetic ----------------------------------------------------------
_FLOAT_OPS = {"add_float", "sub_float", "mul_float"}


def _binary(op: str, xb: Crossbar, a: RealSlot, b: RealSlot, out: RealSlot, rows, fmt, scratch, offsets):
    _check_widths(fmt, a, b, out)
    scratch = _scratch(xb, scratch, a, b, out)
    if op == "add_fixed" or op == "sub_fixed":
        fmt_kind = "fixed"
        build = lambda c: fixed.build_add(c, a.cols, b.cols, out.cols, subtract=op == "sub_fixed")
    elif op == "mul_fixed":
        fmt_kind = "fixed"
        build = lambda c: fixed.build_mul(c, a.cols, b.cols, out.cols)
    elif op in ("add_float", "sub_float"):
        fmt_kind = "float"
        build = lambda c: floating.build_add(c, fmt, a.cols, b.cols, out.cols, subtract=op == "sub_float")
    else:
        fmt_kind = "float"
        build = lambda c: floating.build_mul(c, fmt, a.cols, b.cols, out.cols)
    if fmt.kind != fmt_kind:
        raise ConfigurationError(f"{op} needs a {fmt_kind} format, got {fmt.name}")
    prog = _program((op, fmt, a.base, b.base, out.base), scratch, a.base, build)
    _run(xb, op, fmt, (a, b), out, prog, rows, offsets)


def add_fixed(xb, a, b, out, rows=None, *, fmt, scratch=None, offsets=(0,)):
    _binary("add_fixed", xb, a, b, out, rows, fmt, scratch, offsets)


def sub_fixed(xb, a, b, out, rows=None, *, fmt, scratch=None, offsets=(0,)):
    _binary("sub_fixed", xb, a, b, out, rows, fmt, scratch, offsets)


def mul_fixed(xb, a, b, out, rows=None, *, fmt, scratch=None, offsets=(0,)):
    _binary("mul_fixed", xb, a, b, out, rows, fmt, scratch, offsets)


def add_float(xb, a, b, out, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,)):
    _binary("add_float", xb, a, b, out, rows, fmt, scratch, offsets)


def sub_float(xb, a, b, out, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,)):
    _binary("sub_float", xb, a, b, out, rows, fmt, scratch, offsets)


def mul_float(xb, a, b, out, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,)):
    _binary("mul_float", xb, a, b, out, rows, fmt, scratch, offsets)


def _real_op(fmt: NumberFormat, kind: str):
    prefix = "float" if fmt.is_float else "fixed"
    return {"add": _OPS[f"add_{prefix}"], "sub": _OPS[f"sub_{prefix}"], "mul": _OPS[f"mul_{prefix}"]}[kind]


# -- complex arithmetic -------------------------------------------------------
def complex_add(xb, a: ComplexSlot, b: ComplexSlot, out: ComplexSlot, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,)):
    """``out = a + b`` as two real additions."""
    scratch = _scratch(xb, scratch, a, b, out)
    add = _real_op(fmt, "add")
    add(xb, a.re, b.re, out.re, rows, fmt=fmt, scratch=scratch, offsets=offsets)
    add(xb, a.im, b.im, out.im, rows, fmt=fmt, scratch=scratch, offsets=offsets)


def complex_sub(xb, a: ComplexSlot, b: ComplexSlot, out: ComplexSlot, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,)):
    scratch = _scratch(xb, scratch, a, b, out)
    sub = _real_op(fmt, "sub")
    sub(xb, a.re, b.re, out.re, rows, fmt=fmt, scratch=scratch, offsets=offsets)
    sub(xb, a.im, b.im, out.im, rows, fmt=fmt, scratch=scratch, offsets=offsets)


def complex_mul(xb, a: ComplexSlot, b: ComplexSlot, out: ComplexSlot, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,)):
    """``(ar + i ai)(br + i bi) = (ar br - ai bi) + i (ar bi + ai br)``.

    Four products, one subtraction and one addition, each rounded. When
    ``out`` is disjoint from the operands one ``N``-column temporary is taken
    from the front of the scratch region, otherwise four.
    """
    scratch = _scratch(xb, scratch, a, b, out)
    n = fmt.bits
    mul, add, sub = _real_op(fmt, "mul"), _real_op(fmt, "add"), _real_op(fmt, "sub")
    kw = dict(fmt=fmt, offsets=offsets)
    aliased = bool(set(out.cols) & (set(a.cols) | set(b.cols)))
    ntemp = 4 if aliased else 1
    if len(scratch) < ntemp * n + 1:
        raise ConfigurationError("scratch too small for complex_mul temporaries")
    temps = [RealSlot(scratch.cols[i * n], n) for i in range(ntemp)]
    if any(scratch.cols[i * n + n - 1] != scratch.cols[i * n] + n - 1 for i in range(ntemp)):
        raise ConfigurationError("complex_mul temporaries need contiguous scratch")
    rest = ScratchLayout(scratch.cols[ntemp * n :])
    if aliased:
        t1, t2, t3, t4 = temps
        mul(xb, a.re, b.re, t1, rows, scratch=rest, **kw)
        mul(xb, a.im, b.im, t2, rows, scratch=rest, **kw)
        mul(xb, a.re, b.im, t3, rows, scratch=rest, **kw)
        mul(xb, a.im, b.re, t4, rows, scratch=rest, **kw)
        sub(xb, t1, t2, out.re, rows, scratch=rest, **kw)
        add(xb, t3, t4, out.im, rows, scratch=rest, **kw)
    else:
        (t,) = temps
        mul(xb, a.re, b.re, out.re, rows, scratch=rest, **kw)
        mul(xb, a.im, b.im, t, rows, scratch=rest, **kw)
        sub(xb, out.re, t, out.re, rows, scratch=rest, **kw)
        mul(xb, a.re, b.im, out.im, rows, scratch=rest, **kw)
        mul(xb, a.im, b.re, t, rows, scratch=rest, **kw)
        add(xb, out.im, t, out.im, rows, scratch=rest, **kw)


# -- exact shortcuts ----------------------------------------------------------
def _shortcut(xb, op, fmt, ins, out, rows, scratch, offsets, build):
    prog = _program((op, fmt) + tuple(s.base for s in ins) + (out.base,), scratch, ins[0].base, build)
    _run(xb, op, fmt, ins, out, prog, rows, offsets)


def conjugate_in_place(xb, a: ComplexSlot, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,)):
    """Flip the imaginary sign bit (three NOT steps: copy out, copy back inverted)."""
    scratch = _scratch(xb, scratch, a)
    s = a.im.cols[-1]

    def build(c: Circuit):
        n = c.not_(s)
        c.write_outputs([(s, n)])

    _shortcut(xb, "conj", fmt, (a.im,), a.im, rows, scratch, offsets, build)


def mul_by_i(xb, a: ComplexSlot, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,), out: ComplexSlot | None = None):
    """``(x + iy) -> (-y + ix)``: swap the halves and flip the new real sign (``4N - 1`` NOT steps).

    With ``out`` (disjoint from ``a``) the result is written there instead.
    """
    dst = out if out is not None else a
    scratch = _scratch(xb, scratch, a, dst)
    if not fmt.is_float:
        raise ConfigurationError("mul_by_i sign flip needs a sign-magnitude float format")
    n = a.width
    if len(scratch) < 2 * n - 1:
        raise ConfigurationError("scratch too small for mul_by_i")
    if out is not None and set(out.cols) & set(a.cols):
        raise ConfigurationError("mul_by_i out must be disjoint from its input")
    re, im = a.re.cols, a.im.cols
    ore, oim = dst.re.cols, dst.im.cols

    def build(c: Circuit):
        t = [c._alloc() for _ in range(n)]
        u = [c._alloc() for _ in range(n - 1)]
        g = [(OP_NOT, re[i], 0, t[i]) for i in range(n)]
        g += [(OP_NOT, im[i], 0, u[i]) for i in range(n - 1)]
        g += [(OP_NOT, im[n - 1], 0, ore[n - 1])]
        g += [(OP_NOT, u[i], 0, ore[i]) for i in range(n - 1)]
        g += [(OP_NOT, t[i], 0, oim[i]) for i in range(n)]
        c.gates.extend(g)

    prog = _program(("mul_by_i", fmt, a.re.base, a.im.base, dst.re.base, dst.im.base), scratch, re[0], build)
    mask, _ = xb.mask_for(rows)
    with xb.quiet():
        xb.run_program(prog, mask, tuple(offsets))
    xb._record(("arith", "mul_by_i", fmt, (a.cols,), dst.cols, mask.copy(), tuple(offsets)))


def halve(xb, a: Slot, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,)):
    """Divide by two by decrementing the exponent field.

    A zero exponent is left unchanged; an exponent of 1 becomes a signed zero
    (flag ``underflow``). Applied to each component of a complex slot.
    """
    if not fmt.is_float:
        raise ConfigurationError("halve needs a float format")
    scratch = _scratch(xb, scratch, a)
    parts = (a.re, a.im) if isinstance(a, ComplexSlot) else (a,)
    m, e = fmt.man_bits, fmt.exp_bits
    for s in parts:
        _check_widths(fmt, s)
        M, E = s.cols[:m], s.cols[m : m + e]

        def build(c: Circuit, M=M, E=E):
            nz = c.or_reduce(E)
            borrow, newE = nz, []
            for b in E:
                newE.append(c.xor(b, borrow))
                nb = c.and_not(borrow, b)
                if borrow != nz:  # nz is still needed for the underflow test
                    c.release(borrow)
                borrow = nb
            ez = c.nor_reduce(newE)
            uf = c.and_(ez, nz)
            c.set_flag("underflow", uf)
            newM = [c.and_not(b, uf) for b in M]
            c.write_outputs(list(zip(M, newM)) + list(zip(E, newE)))

        _shortcut(xb, "halve", fmt, (s,), s, rows, scratch, offsets, build)


def copy_slot(xb, src: Slot, dst: Slot, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,)):
    """Column-wise copy via two NOT steps per bit."""
    if src.width != dst.width or len(src.cols) != len(dst.cols):
        raise ConfigurationError("copy between slots of different widths")
    scratch = _scratch(xb, scratch, src, dst)
    srcr, dstr = RealSlot(src.cols[0], len(src.cols)), RealSlot(dst.cols[0], len(dst.cols))
    if srcr.cols != src.cols or dstr.cols != dst.cols:
        raise ConfigurationError("copy_slot needs contiguous slots")

    def build(c: Circuit):
        c.write_outputs(list(zip(dstr.cols, srcr.cols)))

    _shortcut(xb, "copy", fmt, (srcr,), dstr, rows, scratch, offsets, build)


def swap_slots(xb, a: Slot, b: Slot, rows=None, *, fmt=SINGLE, scratch=None, offsets=(0,)):
    """Exchange two equal-width slots in the same rows (4 NOT steps per bit)."""
    if len(a.cols) != len(b.cols):
        raise ConfigurationError("swap between slots of different widths")
    scratch = _scratch(xb, scratch, a, b)
    ar, br = RealSlot(a.cols[0], len(a.cols)), RealSlot(b.cols[0], len(b.cols))
    if ar.cols != a.cols or br.cols != b.cols:
        raise ConfigurationError("swap_slots needs contiguous slots")
    if set(ar.cols) & set(br.cols):
        raise CrossbarError("swap_slots operands overlap")

    def build(c: Circuit):
        pairs = []
        for x, y in zip(ar.cols, br.cols):
            pairs += [(x, y), (y, x)]
        c.write_outputs(pairs)

    prog = _program(("swap", fmt, ar.base, br.base), scratch, ar.base, build)
    mask, _ = xb.mask_for(rows)
    with xb.quiet():
        xb.run_program(prog, mask, tuple(offsets))
    xb._record(("arith", "swap", fmt, (ar.cols, br.cols), ar.cols + br.cols, mask.copy(), tuple(offsets)))


_OPS = {
    "add_fixed": add_fixed,
    "sub_fixed": sub_fixed,
    "mul_fixed": mul_fixed,
    "add_float": add_float,
    "sub_float": sub_float,
    "mul_float": mul_float,
}


def schedule_table(fmt: NumberFormat) -> dict:
    """Gate count (= cycles) and scratch columns of every schedule for ``fmt``."""
    n = fmt.bits
    a, b, o = RealSlot(0, n), RealSlot(n, n), RealSlot(2 * n, n)
    scratch = ScratchLayout.span(3 * n, 3 * n + 1024)
    rows = {}

    def record(name, key, build, anchor=0):
        prog = _program(key, scratch, anchor, build)
        rows[name] = {"cycles": len(prog), "scratch_columns": prog.scratch_used}

    if fmt.is_float:
        for op in ("add", "sub"):
            record(f"{op}_float", (f"{op}_float", fmt, 0, n, 2 * n),
                   lambda c, op=op: floating.build_add(c, fmt, a.cols, b.cols, o.cols, subtract=op == "sub"))
        record("mul_float", ("mul_float", fmt, 0, n, 2 * n), lambda c: floating.build_mul(c, fmt, a.cols, b.cols, o.cols))
        add, mul = rows["add_float"]["cycles"], rows["mul_float"]["cycles"]
        rows["complex_add"] = {"cycles": 2 * add, "scratch_columns": rows["add_float"]["scratch_columns"]}
        rows["complex_mul"] = {"cycles": 4 * mul + 2 * add, "scratch_columns": rows["mul_float"]["scratch_columns"] + n}
        rows["conjugate"] = {"cycles": 3, "scratch_columns": 2}
        rows["mul_by_i"] = {"cycles": 4 * n - 1, "scratch_columns": 2 * n - 1}
    else:
        for op in ("add", "sub"):
            record(f"{op}_fixed", (f"{op}_fixed", fmt, 0, n, 2 * n),
                   lambda c, op=op: fixed.build_add(c, a.cols, b.cols, o.cols, subtract=op == "sub"))
        record("mul_fixed", ("mul_fixed", fmt, 0, n, 2 * n), lambda c: fixed.build_mul(c, a.cols, b.cols, o.cols))
    rows["copy"] = {"cycles": 2 * n, "scratch_columns": n}
    rows["swap"] = {"cycles": 4 * n, "scratch_columns": 2 * n}
    return rows
