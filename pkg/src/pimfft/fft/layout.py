"""Linear (GF(2)) layouts of a length-``n`` sequence over crossbar slots.

An element's physical address has ``L = log2 n`` bits ordered
``[side, unit bits..., row bits...]`` (R-config has row bits only). Every
layout used by the engine is linear: address bit ``k`` equals the parity of
``index & rows[k]``. Loading in snake order, bit reversal and the relabeling
that replaces a skipped input permutation are all linear maps, so stage
transitions can be planned with GF(2) row operations.

Snake order (normative): element ``i`` goes to row ``i // S`` where ``S`` is
the number of slots per row; within even rows the slot is ``i % S``
(leftmost first), within odd rows it is ``S - 1 - i % S``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def _parity(x: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(x) & 1).astype(np.int64)


def log2_exact(n: int) -> int:
    L = n.bit_length() - 1
    if n < 1 or 1 << L != n:
        raise ValueError(f"{n} is not a power of two")
    return L


def gf2_inverse(rows: tuple[int, ...]) -> tuple[int, ...]:
    """Inverse of a square GF(2) matrix given as row bitmasks."""
    L = len(rows)
    a = list(rows)
    inv = [1 << k for k in range(L)]
    for col in range(L):
        piv = next((r for r in range(col, L) if (a[r] >> col) & 1), None)
        if piv is None:
            raise ValueError("layout matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        for r in range(L):
            if r != col and (a[r] >> col) & 1:
                a[r] ^= a[col]
                inv[r] ^= inv[col]
    return tuple(inv)


def gf2_compose(outer: tuple[int, ...], inner: tuple[int, ...]) -> tuple[int, ...]:
    """Rows of ``outer @ inner``."""
    out = []
    for row in outer:
        acc, k = 0, 0
        while row:
            if row & 1:
                acc ^= inner[k]
            row >>= 1
            k += 1
        out.append(acc)
    return tuple(out)


def identity(L: int) -> tuple[int, ...]:
    return tuple(1 << k for k in range(L))


def bit_reversal(L: int) -> tuple[int, ...]:
    return tuple(1 << (L - 1 - k) for k in range(L))


def snake(L: int, slot_bits: int) -> tuple[int, ...]:
    rows = list(identity(L))
    if L > slot_bits:
        for k in range(slot_bits):
            rows[k] |= 1 << slot_bits
    return tuple(rows)


@dataclass(frozen=True)
class Layout:
    """Index -> (row, unit, side) map. ``side_bits`` is 0 for R-config, else 1."""

    rows: tuple[int, ...]
    side_bits: int
    unit_bits: int

    def __post_init__(self):
        gf2_inverse(self.rows)

    @property
    def L(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return 1 << self.L

    @property
    def row_bits(self) -> int:
        return self.L - self.side_bits - self.unit_bits

    @property
    def slot_bits(self) -> int:
        return self.side_bits + self.unit_bits

    @cached_property
    def inverse_rows(self) -> tuple[int, ...]:
        return gf2_inverse(self.rows)

    def address(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        a = np.zeros_like(idx)
        for k, row in enumerate(self.rows):
            a |= _parity(idx & row) << k
        return a

    def index_of(self, addr) -> np.ndarray:
        addr = np.asarray(addr, dtype=np.int64)
        i = np.zeros_like(addr)
        for k, row in enumerate(self.inverse_rows):
            i |= _parity(addr & row) << k
        return i

    def split(self, addr):
        """Address -> (row, slot) with ``slot = side + 2 * unit``."""
        addr = np.asarray(addr, dtype=np.int64)
        return addr >> self.slot_bits, addr & ((1 << self.slot_bits) - 1)

    def locate(self, idx):
        """Index -> (row, slot)."""
        return self.split(self.address(idx))

    def with_rows(self, rows) -> "Layout":
        return Layout(tuple(rows), self.side_bits, self.unit_bits)

    def relabel(self, perm_rows: tuple[int, ...]) -> "Layout":
        """Layout of the sequence ``y_j = x_{P j}`` where ``P`` has rows ``perm_rows``."""
        return self.with_rows(gf2_compose(self.rows, perm_rows))

    def describe(self) -> list[str]:
        names = []
        for k in range(self.L):
            if k < self.side_bits:
                names.append("side")
            elif k < self.slot_bits:
                names.append(f"unit{k - self.side_bits}")
            else:
                names.append(f"row{k - self.slot_bits}")
        return [f"{nm} = " + " ^ ".join(f"i{b}" for b in range(self.L) if (r >> b) & 1) for nm, r in zip(names, self.rows)]


# -- transition planning ----------------------------------------------------
def _solve(basis: list[int], target: int) -> list[int] | None:
    """Indices of basis rows whose XOR equals ``target`` (None if impossible)."""
    vecs = [(b, 1 << i) for i, b in enumerate(basis)]
    pivots: list[tuple[int, int]] = []
    for v, tag in vecs:
        for pv, pt in pivots:
            if v & (pv & -pv):
                v ^= pv
                tag ^= pt
        if v:
            # keep pivots reduced on their lowest set bit
            low = v & -v
            pivots = [(pv ^ v, pt ^ tag) if pv & low else (pv, pt) for pv, pt in pivots]
            pivots.append((v, tag))
    t, tag = target, 0
    for pv, pt in pivots:
        if t & (pv & -pv):
            t ^= pv
            tag ^= pt
    if t:
        return None
    return [i for i in range(len(basis)) if (tag >> i) & 1]


def plan_transition(layout: Layout, c: int) -> tuple[list[tuple], Layout]:
    """Steps making the side bit equal index bit ``c`` and nothing else depend on it.

    Step kinds (address bit ``k >= 1``):
      ``("xchg", k)``      exchange side with bit k;
      ``("xor_into", k)``  bit k ^= side (moves side-1 elements across bit k);
      ``("flip", ks)``     side ^= parity of bits ``ks`` (conditional in-unit swap).
    """
    if layout.side_bits != 1:
        raise ValueError("transitions apply to two-slot layouts")
    rows = list(layout.rows)
    steps: list[tuple] = []
    bit = 1 << c
    if not rows[0] & bit:
        cand = [k for k in range(1, len(rows)) if rows[k] & bit]
        # unit bits are cheaper to exchange than row bits
        k = min(cand, key=lambda k: (k > layout.slot_bits - 1, k))
        rows[0], rows[k] = rows[k], rows[0]
        steps.append(("xchg", k))
    for k in range(1, len(rows)):
        if rows[k] & bit:
            rows[k] ^= rows[0]
            steps.append(("xor_into", k))
    extra = rows[0] ^ bit
    if extra:
        ks = _solve(rows[1:], extra)
        if ks is None:
            raise ValueError("transition target not reachable")
        ks = tuple(k + 1 for k in ks)
        for k in ks:
            rows[0] ^= rows[k]
        steps.append(("flip", ks))
    assert rows[0] == bit and all(not (r & bit) for r in rows[1:])
    return steps, layout.with_rows(rows)


def pair_bit_r(layout: Layout, c: int) -> int:
    """R-config: the row bit that equals index bit ``c`` exactly."""
    for k, r in enumerate(layout.rows):
        if r == 1 << c:
            return k
    raise ValueError(f"index bit {c} is not a plain row bit of this layout")
