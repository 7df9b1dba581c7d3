"""Bit-serial floating-point add/sub and multiply as NOR/NOT schedules.

Semantics (mirrored exactly by :class:`pimfft.oracle.FormatEmulator`):

* round to nearest, ties to even;
* an operand whose exponent field is 0 reads as a signed zero;
* a result whose biased exponent is <= 0 is flushed to a signed zero
  (flag ``underflow``); one whose biased exponent is >= ``2**e - 1`` becomes
  a signed infinity pattern (flag ``overflow``);
* an all-ones input exponent is processed as an ordinary finite exponent;
* an exact zero sum has sign ``sx AND sy``; a zero product has sign ``sx XOR sy``.

Add datapath (``W = p + 3`` bits: hidden, mantissa, guard, round, sticky):
magnitude compare, operand swap, exponent difference with saturation,
sticky right shift, signed significand add, one-bit right or
logarithmic left normalization, rounding and exponent update.
Multiply datapath: LSB-first shift-and-add with a ``p``-bit accumulator
window, low product bits folded into a sticky bit, one-bit normalization,
rounding, and ``Ea + Eb + top - bias``.
"""

from __future__ import annotations

import math
from typing import Sequence

from .circuit import ONE, ZERO, Circuit
from .formats import NumberFormat


def _split(fmt: NumberFormat, cols: Sequence[int]):
    m, e = fmt.man_bits, fmt.exp_bits
    return list(cols[:m]), list(cols[m : m + e]), cols[m + e]


def _shift_bits(width: int) -> int:
    """Number of shift-amount bits ``K`` with ``2**K >= width``."""
    return max(1, math.ceil(math.log2(width)))


def _exponent_tail(c: Circuit, fmt: NumberFormat, E: list[int], zero: int, sign: int, out: Sequence[int], mant):
    """Classify the ``e+2``-bit signed exponent ``E`` and write the result."""
    e = fmt.exp_bits
    Es = E[e + 1]
    ez = c.nor_reduce(E[: e + 1])
    uf = c.or_(Es, ez)
    top_ones = c.and_reduce(E[:e])
    big = c.or_(E[e], top_ones)
    of = c.and_not(big, Es)
    c.release(ez, top_ones, big)

    c.set_flag("underflow", c.and_not(uf, zero))
    c.set_flag("overflow", c.and_not(of, zero))
    clear = c.or_(zero, uf)
    keep = c.nor(clear, of)
    res_m = [c.and_(b, keep) for b in mant]
    res_e = []
    for b in E[:e]:
        t = c.and_not(b, clear)
        res_e.append(c.or_(t, of))
        c.release(t)
    bits = res_m + res_e + [sign]
    c.write_outputs(list(zip(out, bits)))


def build_add(c: Circuit, fmt: NumberFormat, x: Sequence[int], y: Sequence[int], out: Sequence[int], subtract=False):
    e, m = fmt.exp_bits, fmt.man_bits
    p = m + 1
    W = p + 3
    K = _shift_bits(W)
    Mx, Ex, sx = _split(fmt, x)
    My, Ey, sy = _split(fmt, y)
    if subtract:
        sy = c.not_(sy)

    hx = c.or_reduce(Ex)
    hy = c.or_reduce(Ey)

    # |y| > |x| iff x + ~y + 1 produces no carry over the E||M field
    with c.scope():
        carry = ONE
        for xb, yb in zip(Mx + Ex, My + Ey):
            ny = c.not_(yb)
            nc = c.majority(xb, ny, carry)
            c.release(ny, carry)
            carry = nc
        swap = c.not_(carry)
        c.export(swap)
    nswap = c.not_(swap)

    sbig = c.mux(swap, sy, sx)
    hbig = c.or_(hx, hy)
    hsmall = c.and_(hx, hy)
    Ebig = [c.mux(swap, b, a) for a, b in zip(Ex, Ey)]
    Mbig = [c.mux(swap, b, a) for a, b in zip(Mx, My)]
    Esmall = [c.mux(swap, a, b) for a, b in zip(Ex, Ey)]
    Msmall = [c.mux(swap, a, b) for a, b in zip(Mx, My)]
    c.release(nswap, swap)

    # d = Ebig - Esmall >= 0, saturated to K bits
    nE = c.invert(Esmall)
    d, dc = c.ripple_add(Ebig, nE, ONE)
    c.release(dc, *nE, *Esmall)
    with c.scope():
        over = c.or_reduce(d[K:])
        nh = c.not_(hsmall)
        sat = c.or_(over, nh)
        amounts = [c.or_(d[j], sat) if j < len(d) else sat for j in range(K)]
        c.export(*amounts)
    c.release(*d)

    # sticky right shift of the smaller significand
    Y = [ZERO, ZERO, ZERO] + Msmall + [c._own(hsmall)]
    for j in range(K):
        k = 1 << j
        s = amounts[j]
        ns = c.not_(s)
        lo = c.or_reduce(Y[: k + 1])
        newY = [c.mux(s, lo, Y[0])]
        c.release(lo)
        for i in range(1, W):
            newY.append(c.mux(s, Y[i + k] if i + k < W else ZERO, Y[i]))
        c.release(ns, s, *Y)
        Y = newY
    sticky = c.and_(Y[0], hsmall)
    c.release(Y[0], hsmall)
    Y[0] = sticky

    # significand add / subtract
    sx_c = c._own(sx)
    eff = c.xor(sx, sy)
    X = [ZERO, ZERO, ZERO] + Mbig + [hbig]
    Yx = [c.xor(b, eff) for b in Y]
    c.release(*Y)
    Z, cout = c.ripple_add(X, Yx, eff)
    c.release(*Yx, *Mbig)
    mc = c.and_not(cout, eff)
    c.release(cout, eff)

    # right normalization on carry out
    lo = c.or_(Z[0], Z[1])
    nz = [c.mux(mc, lo, Z[0])]
    c.release(lo)
    for i in range(1, W):
        nz.append(c.mux(mc, Z[i + 1] if i + 1 < W else ONE, Z[i]))
    c.release(*Z)
    Z = nz

    # left normalization, largest step first
    lzc = [ZERO] * K
    for j in reversed(range(K)):
        k = 1 << j
        if k >= W:
            continue
        zt = c.nor_reduce(Z[W - k :])
        nz = [c.mux(zt, Z[i - k] if i >= k else ZERO, Z[i]) for i in range(W)]
        c.release(*Z)
        Z = nz
        lzc[j] = zt

    # round to nearest even
    top = Z[W - 1]
    G, R, S, lsb = Z[2], Z[1], Z[0], Z[3]
    rs = c.or_(R, S)
    t = c.or_(rs, lsb)
    up = c.and_(G, t)
    c.release(rs, t)
    mant, carry = [], up
    for b in Z[3 : W - 1]:
        s, carry2 = c.half_adder(b, carry)
        c.release(carry)
        mant.append(s)
        carry = carry2
    co = carry

    # E = Ebig + mc + co - lzc in e+2 signed bits
    Eext = Ebig + [ZERO, ZERO]
    E1, c1 = c.ripple_add(Eext, [co] + [ZERO] * (e + 1), mc)
    c.release(c1, *Ebig, co, mc)
    nl = c.invert(lzc + [ZERO] * (e + 2 - K))
    E, c2 = c.ripple_add(E1, nl, ONE)
    c.release(c2, *E1, *nl, *lzc)

    th = c.and_(top, hbig)
    zero = c.not_(th)
    c.release(th)
    zsign = c.and_(sx_c, sy)
    sign = c.mux(zero, zsign, sbig)
    _exponent_tail(c, fmt, E, zero, sign, out, mant)


def build_mul(c: Circuit, fmt: NumberFormat, x: Sequence[int], y: Sequence[int], out: Sequence[int]):
    e, m = fmt.exp_bits, fmt.man_bits
    p = m + 1
    Ma, Ea, sa = _split(fmt, x)
    Mb, Eb, sb = _split(fmt, y)

    sign = c.xor(sa, sb)
    ha = c.or_reduce(Ea)
    hb = c.or_reduce(Eb)
    A = Ma + [ha]
    B = Mb + [hb]
    nA = c.invert(A)

    acc = [ZERO] * p
    sticky = ZERO
    kept = {}
    for i in range(p):
        with c.scope():
            nb = c.not_(B[i])
            pp = [c.nor(na, nb) for na in nA]
            ssum, carry = c.ripple_add(acc, pp)
            c.export(*ssum, carry)
        c.release(*acc)
        low = ssum[0]
        if i <= p - 3:
            st = c.or_(sticky, low)
            c.release(sticky, low)
            sticky = st
        else:
            kept[i] = low
        acc = ssum[1:] + [carry]
    c.release(*nA)

    top = acc[p - 1]
    p1, p2 = kept[p - 1], kept[p - 2]
    hi_mant = acc[: p - 1]
    lo_mant = [p1] + acc[: p - 2]
    mant = [c.mux(top, a, b) for a, b in zip(hi_mant, lo_mant)]
    G = c.mux(top, p1, p2)
    st_hi = c.or_(sticky, p2)
    st = c.mux(top, st_hi, sticky)
    c.release(st_hi, sticky, p1, p2)
    up_t = c.or_(st, mant[0])
    up = c.and_(G, up_t)
    c.release(up_t, st, G)
    rounded, carry = [], up
    for b in mant:
        s, carry2 = c.half_adder(b, carry)
        c.release(carry)
        rounded.append(s)
        carry = carry2
    c.release(*mant)
    co = carry

    # E = Ea + Eb + top + co - bias in e+2 signed bits
    E1, c1 = c.ripple_add(Ea + [ZERO, ZERO], Eb + [ZERO, ZERO], top)
    c.release(c1)
    nb = (-fmt.bias) & ((1 << (e + 2)) - 1)
    const = [ONE if (nb >> i) & 1 else ZERO for i in range(e + 2)]
    E, c2 = c.ripple_add(E1, const, co)
    c.release(c2, *E1, co, *acc)

    both = c.and_(ha, hb)
    zero = c.not_(both)
    c.release(both)
    _exponent_tail(c, fmt, E, zero, sign, out, rounded)
