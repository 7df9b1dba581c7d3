"""Two's-complement fixed-point add/sub/mul as NOR/NOT schedules.

Add is a ripple-carry chain of 9-gate full adders; subtraction adds the
complement with carry-in 1. Multiplication keeps the low ``N`` bits of the
product via a truncated LSB-first shift-and-add (wrap-around semantics).
"""

from __future__ import annotations

from typing import Sequence

from .circuit import ONE, ZERO, Circuit


def build_add(c: Circuit, a: Sequence[int], b: Sequence[int], out: Sequence[int], subtract=False):
    if subtract:
        nb = c.invert(b)
        s, co = c.ripple_add(list(a), nb, ONE)
    else:
        s, co = c.ripple_add(list(a), list(b), ZERO)
    c.write_outputs(list(zip(out, s)))


def build_mul(c: Circuit, a: Sequence[int], b: Sequence[int], out: Sequence[int]):
    n = len(a)
    na = c.invert(a)
    acc = [ZERO] * n
    for i in range(n):
        with c.scope():
            nb = c.not_(b[i])
            pp = [c.nor(x, nb) for x in na[: n - i]]
            s, co = c.ripple_add(acc[i:], pp)
            c.export(*s)
        c.release(*acc[i:])
        acc = acc[:i] + s
    c.write_outputs(list(zip(out, acc)))
