"""NOR/NOT circuit builder used to derive the bit-serial gate schedules.

A :class:`Circuit` emits column gates ``(op, a, b, out)`` over absolute
column indices. Signals are column indices or the constants :data:`ZERO` and
:data:`ONE`; constants are folded away wherever possible and materialized
from an anchor column otherwise. Scratch columns are reference counted and
reused lowest-index first, so every schedule is deterministic.

Ownership rule: every signal returned by a builder method carries one
reference owned by the innermost open :meth:`Circuit.scope`. Release early
with :meth:`Circuit.release` or hand it to the enclosing scope with
:meth:`Circuit.export`.
"""

from __future__ import annotations

import heapq
from contextlib import contextmanager
from typing import Sequence

from ..crossbar import ConfigurationError, Program
from ..kernels import OP_NOR, OP_NOT

ZERO = -1
ONE = -2


def is_const(s: int) -> bool:
    return s < 0


class Circuit:
    def __init__(self, scratch: Sequence[int], anchor: int, name: str = ""):
        self.name = name
        self.anchor = anchor
        self.gates: list[tuple[int, int, int, int]] = []
        self.flag_cols: dict[str, int] = {}
        self._scratch = frozenset(scratch)
        if anchor in self._scratch:
            raise ConfigurationError("anchor column must not be scratch")
        self._pool = sorted(self._scratch)
        heapq.heapify(self._pool)
        self._ref: dict[int, int] = {}
        self._scopes: list[list[int]] = [[]]
        self._neg: dict[int, int] = {}
        self._memo: dict[tuple, int] = {}
        self._memo_by_col: dict[int, list] = {}
        self._const: dict[int, int] = {}
        self._attached: dict[int, list[int]] = {}
        self.cols_touched: set[int] = set()

    # -- allocation ----------------------------------------------------
    def _own(self, s: int) -> int:
        if s in self._scratch:
            self._ref[s] = self._ref.get(s, 0) + 1
            self._scopes[-1].append(s)
        return s

    def _alloc(self) -> int:
        if not self._pool:
            raise ConfigurationError(f"circuit {self.name!r}: scratch exhausted ({len(self._scratch)} columns)")
        c = heapq.heappop(self._pool)
        self.cols_touched.add(c)
        return c

    def _drop(self, c: int) -> None:
        self._ref[c] -= 1
        if self._ref[c] == 0:
            del self._ref[c]
            self._forget(c)
            heapq.heappush(self._pool, c)
            for a in self._attached.pop(c, ()):
                self._drop(a)

    def pinned_not(self, s: int) -> int:
        """Borrowed complement of ``s`` kept alive for as long as ``s`` is.

        Complements of operand columns stay alive for the whole circuit.
        """
        n = self.not_(s)
        if n not in self._scratch or n in self._attached.get(s, ()) or s in self._attached.get(n, ()):
            self.release(n)  # already kept alive elsewhere
            return n
        self._scopes[-1].remove(n)
        if s in self._scratch:
            self._attached.setdefault(s, []).append(n)
        else:
            self._scopes[0].append(n)
        return n

    def _forget(self, c: int) -> None:
        n = self._neg.pop(c, None)
        if n is not None and self._neg.get(n) == c:
            del self._neg[n]
        for key in self._memo_by_col.pop(c, ()):
            self._memo.pop(key, None)

    def release(self, *sigs: int) -> None:
        for s in sigs:
            if s not in self._scratch:
                continue
            for scope in reversed(self._scopes):
                if s in scope:
                    scope.remove(s)
                    break
            else:
                raise ConfigurationError(f"release of unowned column {s}")
            self._drop(s)

    def export(self, *sigs: int) -> None:
        """Move one reference of each signal to the enclosing scope."""
        if len(self._scopes) < 2:
            return
        for s in sigs:
            if s in self._scratch:
                self._scopes[-1].remove(s)
                self._scopes[-2].append(s)

    @contextmanager
    def scope(self):
        self._scopes.append([])
        try:
            yield self
        finally:
            for c in self._scopes.pop():
                self._drop(c)

    @property
    def live(self) -> int:
        return len(self._ref)

    # -- raw gates -----------------------------------------------------
    def _gate(self, op: int, a: int, b: int) -> int:
        key = (op, min(a, b), max(a, b)) if op == OP_NOR else (op, a)
        hit = self._memo.get(key)
        if hit is not None:
            return self._own(hit)
        out = self._alloc()
        self.gates.append((op, a, b if op == OP_NOR else 0, out))
        self._memo[key] = out
        for c in {a, b, out} if op == OP_NOR else {a, out}:
            self._memo_by_col.setdefault(c, []).append(key)
        return self._own(out)

    # -- folded logic --------------------------------------------------
    def not_(self, a: int) -> int:
        if a == ZERO:
            return ONE
        if a == ONE:
            return ZERO
        n = self._neg.get(a)
        if n is not None:
            return self._own(n)
        out = self._gate(OP_NOT, a, 0)
        self._neg[a] = out
        self._neg.setdefault(out, a)
        return out

    def nor(self, a: int, b: int) -> int:
        if a == ONE or b == ONE:
            return ZERO
        if a == ZERO:
            return self.not_(b)
        if b == ZERO or a == b:
            return self.not_(a)
        if self._neg.get(a) == b:
            return ZERO
        return self._gate(OP_NOR, a, b)

    def or_(self, a: int, b: int) -> int:
        if a == ZERO:
            return self._own(b)
        if b == ZERO or a == b:
            return self._own(a)
        n = self.nor(a, b)
        out = self.not_(n)
        self.release(n)
        return out

    def and_(self, a: int, b: int) -> int:
        if a == ONE:
            return self._own(b)
        if b == ONE or a == b:
            return self._own(a)
        na, nb = self.not_(a), self.pinned_not(b)
        out = self.nor(na, nb)
        self.release(na)
        return out

    def and_not(self, a: int, b: int) -> int:
        """``a AND NOT b``."""
        na = self.not_(a)
        out = self.nor(na, b)
        self.release(na)
        return out

    def xnor(self, a: int, b: int) -> int:
        if is_const(a):
            a, b = b, a
        if b == ZERO:
            return self.not_(a)
        if b == ONE:
            return self._own(a)
        if a == b:
            return ONE
        if self._neg.get(a) == b:
            return ZERO
        g1 = self.nor(a, b)
        g2 = self.nor(a, g1)
        g3 = self.nor(b, g1)
        out = self.nor(g2, g3)
        self.release(g1, g2, g3)
        return out

    def xor(self, a: int, b: int) -> int:
        if is_const(a):
            a, b = b, a
        if b == ZERO:
            return self._own(a)
        if b == ONE:
            return self.not_(a)
        xn = self.xnor(a, b)
        out = self.not_(xn)
        self.release(xn)
        return out

    def mux(self, s: int, a: int, b: int) -> int:
        """``a`` where ``s`` else ``b``."""
        if s == ONE or a == b:
            return self._own(a)
        if s == ZERO:
            return self._own(b)
        ns = self.pinned_not(s)
        p = self.nor(ns, a)
        q = self.nor(s, b)
        out = self.nor(p, q)
        self.release(p, q)
        return out

    def half_adder(self, a: int, b: int) -> tuple[int, int]:
        if is_const(a):
            a, b = b, a
        if b == ZERO:
            return self._own(a), ZERO
        if b == ONE:
            return self.not_(a), self._own(a)
        if a == b:
            return ZERO, self._own(a)
        g1 = self.nor(a, b)
        g2 = self.nor(a, g1)
        g3 = self.nor(b, g1)
        xn = self.nor(g2, g3)
        s = self.not_(xn)
        c = self.nor(g1, s)
        self.release(g1, g2, g3, xn)
        return s, c

    def full_adder(self, a: int, b: int, c: int) -> tuple[int, int]:
        ins = sorted((a, b, c))  # constants sort first
        if ins[0] == ONE or ins[1] == ONE:
            if ins[0] == ONE and ins[1] == ONE:
                return self._own(ins[2]), ONE
            x, y = (ins[1], ins[2]) if ins[0] == ONE else (ins[0], ins[2])
            if is_const(x):  # ONE with ZERO
                return self.half_adder(ONE, y)
            return self.xnor(x, y), self.or_(x, y)
        if ins[0] == ZERO:
            return self.half_adder(ins[1], ins[2])
        if a == b:
            return self._own(c), self._own(a)
        if a == c or b == c:
            return self._own(b if a == c else a), self._own(c)
        g1 = self.nor(a, b)
        g2 = self.nor(a, g1)
        g3 = self.nor(b, g1)
        g4 = self.nor(g2, g3)
        g5 = self.nor(g4, c)
        g6 = self.nor(g4, g5)
        g7 = self.nor(c, g5)
        s = self.nor(g6, g7)
        co = self.nor(g1, g5)
        self.release(g1, g2, g3, g4, g5, g6, g7)
        return s, co

    def majority(self, a: int, b: int, c: int) -> int:
        """Carry out of ``a + b + c`` without the sum (6 gates)."""
        ins = sorted((a, b, c))
        if ins[0] == ONE:
            return self.or_(ins[1], ins[2]) if ins[1] != ONE else ONE
        if ins[0] == ZERO:
            return self.and_(ins[1], ins[2]) if ins[1] != ZERO else ZERO
        if a == b or a == c:
            return self._own(a)
        if b == c:
            return self._own(b)
        g1 = self.nor(a, b)
        g2 = self.nor(a, g1)
        g3 = self.nor(b, g1)
        g4 = self.nor(g2, g3)
        g5 = self.nor(g4, c)
        co = self.nor(g1, g5)
        self.release(g1, g2, g3, g4, g5)
        return co

    # -- multi-bit helpers ---------------------------------------------
    def nor_reduce(self, bits: Sequence[int]) -> int:
        """1 iff every bit is 0."""
        bits = [b for b in bits if b != ZERO]
        if any(b == ONE for b in bits):
            return ZERO
        if not bits:
            return ONE
        if len(bits) == 1:
            return self.not_(bits[0])
        acc = self.nor(bits[0], bits[1])
        for b in bits[2:]:
            t = self.not_(acc)
            self.release(acc)
            acc = self.nor(t, b)
            self.release(t)
        return acc

    def or_reduce(self, bits: Sequence[int]) -> int:
        n = self.nor_reduce(bits)
        out = self.not_(n)
        self.release(n)
        return out

    def and_reduce(self, bits: Sequence[int]) -> int:
        neg = [self.not_(b) for b in bits]
        out = self.nor_reduce(neg)
        self.release(*neg)
        return out

    def ripple_add(self, a: Sequence[int], b: Sequence[int], cin: int = ZERO) -> tuple[list[int], int]:
        """LSB-first ripple-carry sum; returns (sum bits, carry out)."""
        if len(a) != len(b):
            raise ConfigurationError("ripple_add width mismatch")
        out, c = [], cin
        self._own(c)
        for x, y in zip(a, b):
            s, c2 = self.full_adder(x, y, c)
            self.release(c)
            out.append(s)
            c = c2
        return out, c

    def invert(self, bits: Sequence[int]) -> list[int]:
        return [self.not_(b) for b in bits]

    # -- outputs and flags ---------------------------------------------
    def constant(self, value: int) -> int:
        """Scratch column holding a constant (materialized from the anchor)."""
        if value not in self._const:
            t = self._gate(OP_NOT, self.anchor, 0)
            z = self._gate(OP_NOR, self.anchor, t)
            o = self._gate(OP_NOT, z, 0)
            self._neg[z], self._neg[o] = o, z
            self._const = {0: z, 1: o}
            for c in (t, z, o):  # pinned for the lifetime of the circuit
                self._scopes[0].append(c)
                self._ref[c] += 1
            self.release(t, z, o)
        return self._const[value]

    def _scratch_copy_of_negation(self, s: int) -> int:
        if s == ZERO:
            return self.constant(1)
        if s == ONE:
            return self.constant(0)
        n = self.not_(s)
        if n in self._scratch:
            return n
        self.release(n)
        return self._gate(OP_NOT, s, 0)

    def set_flag(self, name: str, s: int) -> None:
        col = self.constant(1 if s == ONE else 0) if is_const(s) else s
        if col not in self._scratch:
            n = self.not_(col)
            col = self._gate(OP_NOT, n, 0)
            self.release(n)
        self._ref[col] = self._ref.get(col, 0) + 1
        self._scopes[0].append(col)
        self.flag_cols[name] = col

    def write_outputs(self, pairs: Sequence[tuple[int, int]]) -> None:
        """Store signals into output columns; all reads happen before any write."""
        negs = [self._scratch_copy_of_negation(s) for _, s in pairs]
        for (o, _), n in zip(pairs, negs):
            if o in self._scratch:
                raise ConfigurationError(f"output column {o} overlaps scratch")
            self.gates.append((OP_NOT, n, 0, o))

    def program(self, name: str | None = None) -> Program:
        return Program(self.gates, name or self.name, self.flag_cols, scratch_used=len(self.cols_touched))
