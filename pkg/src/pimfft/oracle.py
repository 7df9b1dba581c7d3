"""Host-side reference implementations used for verification.

``naive_dft``/``naive_idft`` evaluate the transform sums directly in double
precision, ``host_fft``/``host_ifft`` are an independent radix-2
decimation-in-time FFT, ``schoolbook_polymul`` is the quadratic convolution,
and :class:`FormatEmulator` reproduces the in-memory arithmetic bit for bit.
:func:`replay_sequence` re-executes a crossbar log: data-movement gates with a
plain numpy evaluator and every arithmetic record with the emulator.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .arith.formats import NumberFormat, bits_to_codes, codes_to_bits
from .kernels import OP_NOR


# -- transforms ---------------------------------------------------------------
def naive_dft(x) -> np.ndarray:
    """:math:`X_k = \\sum_j x_j \\omega_n^{jk}` with :math:`\\omega_n = e^{-2\\pi i/n}`."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.size
    if n == 0:
        return x.copy()
    jk = np.outer(np.arange(n), np.arange(n)) % n
    return np.exp(-2j * np.pi * jk / n) @ x


def naive_idft(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.complex128)
    n = X.size
    if n == 0:
        return X.copy()
    jk = np.outer(np.arange(n), np.arange(n)) % n
    return (np.exp(2j * np.pi * jk / n) @ X) / n


def bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    if n < 1 or 1 << bits != n:
        raise ValueError(f"length {n} is not a power of two")
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _radix2(x: np.ndarray, sign: float) -> np.ndarray:
    n = x.size
    a = x[bit_reverse_indices(n)].astype(np.complex128)
    h = 1
    while h < n:
        w = np.exp(sign * 2j * np.pi * np.arange(h) / (2 * h))
        a = a.reshape(-1, 2 * h)
        u = a[:, :h].copy()
        v = a[:, h:] * w
        a[:, :h] = u + v
        a[:, h:] = u - v
        a = a.reshape(-1)
        h *= 2
    return a


def host_fft(x) -> np.ndarray:
    """Radix-2: input bit-reversal permutation then ``log2 n`` butterfly stages."""
    return _radix2(np.asarray(x, dtype=np.complex128), -1.0)


def host_ifft(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.complex128)
    return _radix2(X, 1.0) / X.size


def schoolbook_polymul(a, b, mode: str = "acyclic") -> np.ndarray:
    """Direct convolution of coefficient lists (lowest degree first)."""
    a = np.asarray(a)
    b = np.asarray(b)
    dtype = np.result_type(a.dtype, b.dtype, np.float64)
    if mode == "acyclic":
        out = np.zeros(a.size + b.size - 1, dtype=dtype)
        for i, ai in enumerate(a):
            out[i : i + b.size] += ai * b
        return out
    if mode == "cyclic":
        if a.size != b.size:
            raise ValueError("cyclic product needs equal lengths")
        n = a.size
        out = np.zeros(n, dtype=dtype)
        for i, ai in enumerate(a):
            out += ai * np.roll(b, i)
        return out
    raise ValueError(f"unknown mode {mode!r}")


def relative_l2(x, ref) -> float:
    x = np.asarray(x, dtype=np.complex128)
    ref = np.asarray(ref, dtype=np.complex128)
    den = np.linalg.norm(ref)
    num = np.linalg.norm(x - ref)
    return float(num / den) if den else float(num)


# -- format emulator ----------------------------------------------------------
@dataclass(frozen=True)
class FormatEmulator:
    """Bit-exact model of the in-memory arithmetic.

    Float operands are read with a zero exponent as signed zero and an
    all-ones exponent as an ordinary finite value. Sums, differences and
    products are formed in double precision, which is exact for products and
    rounds sums only once more than ``2p + 2`` bits away, so the final rounding
    to ``p`` bits equals direct correct rounding. ``rounding="toward_zero"``
    exists only as a negative control for replay checks.
    """

    fmt: NumberFormat
    rounding: str = "nearest_even"
    flush_subnormals: bool = True

    def __post_init__(self):
        if self.rounding not in ("nearest_even", "toward_zero"):
            raise ValueError(f"unknown rounding {self.rounding!r}")
        if not self.flush_subnormals:
            raise ValueError("only flush-to-zero is modeled")

    # host value of each code as the arithmetic sees it
    def value(self, codes) -> np.ndarray:
        f = self.fmt
        c = np.asarray(codes, dtype=np.uint64).astype(np.int64)
        if f.kind == "fixed":
            return f.decode(codes)
        s, e, m = f.fields(c)
        mag = np.ldexp((m + (1 << f.man_bits)).astype(np.float64), e - f.bias - f.man_bits)
        mag = np.where(e == 0, 0.0, mag)
        return np.where(s == 1, -mag, mag)

    def round(self, values) -> tuple[np.ndarray, Counter]:
        f = self.fmt
        v = np.asarray(values, dtype=np.float64)
        p, m, e = f.precision, f.man_bits, f.exp_bits
        sign = np.signbit(v).astype(np.int64)
        a = np.abs(v)
        frac, ex = np.frexp(a)
        scaled = np.ldexp(frac, p)
        sig = (np.rint(scaled) if self.rounding == "nearest_even" else np.floor(scaled)).astype(np.int64)
        carry = sig >> p
        sig = np.where(carry > 0, sig >> 1, sig)
        ef = ex + carry - 1 + f.bias
        nonzero = a != 0
        uf = nonzero & (ef <= 0)
        of = nonzero & (ef >= f.exp_max_field)
        ef = np.where(~nonzero | uf, 0, np.where(of, f.exp_max_field, ef))
        man = np.where(~nonzero | uf | of, 0, sig & ((1 << m) - 1))
        codes = ((sign << (m + e)) | (ef << m) | man).astype(np.uint64)
        flags = Counter({"underflow": int(uf.sum()), "overflow": int(of.sum())})
        return codes, +flags

    def _fixed(self, x, y, op):
        # two's complement wrap-around equals unsigned arithmetic modulo 2**N
        a = np.asarray(x, dtype=np.uint64)
        b = np.asarray(y, dtype=np.uint64)
        r = {"add": a + b, "sub": a - b, "mul": a * b}[op]
        return r & np.uint64((1 << self.fmt.bits) - 1), Counter()

    def add(self, x, y):
        if self.fmt.kind == "fixed":
            return self._fixed(x, y, "add")
        return self.round(self.value(x) + self.value(y))

    def sub(self, x, y):
        if self.fmt.kind == "fixed":
            return self._fixed(x, y, "sub")
        return self.round(self.value(x) - self.value(y))

    def mul(self, x, y):
        if self.fmt.kind == "fixed":
            return self._fixed(x, y, "mul")
        return self.round(self.value(x) * self.value(y))

    def halve(self, x):
        f = self.fmt
        c = np.asarray(x, dtype=np.uint64).astype(np.int64)
        s, e, m = f.fields(c)
        uf = e == 1
        e2 = np.where(e == 0, 0, e - 1)
        m2 = np.where(uf, 0, m)
        out = (s << (f.exp_bits + f.man_bits)) | (e2 << f.man_bits) | m2
        return out.astype(np.uint64), +Counter({"underflow": int(uf.sum())})

    def negate(self, x):
        return (np.asarray(x, dtype=np.uint64) ^ np.uint64(1 << (self.fmt.bits - 1))), Counter()

    def complex_mul(self, ar, ai, br, bi):
        """Literal four-product form, every operation rounded."""
        p1, _ = self.mul(ar, br)
        p2, _ = self.mul(ai, bi)
        p3, _ = self.mul(ar, bi)
        p4, _ = self.mul(ai, br)
        re, _ = self.sub(p1, p2)
        im, _ = self.add(p3, p4)
        return re, im


# -- log replay ---------------------------------------------------------------
def _apply_arith(state: np.ndarray, rec, rounding: str) -> None:
    _, op, fmt, ins, outs, mask, offsets = rec
    rows = np.flatnonzero(np.unpackbits(mask.view(np.uint8), bitorder="little")[: state.shape[0]])
    emu = FormatEmulator(fmt, rounding)
    for off in offsets:
        cols_in = [np.asarray(c) + off for c in ins]
        cols_out = np.asarray(outs) + off
        vals = [bits_to_codes(state[np.ix_(rows, c)]) for c in cols_in]
        if op in ("add_float", "add_fixed"):
            res, _ = emu.add(*vals)
        elif op in ("sub_float", "sub_fixed"):
            res, _ = emu.sub(*vals)
        elif op in ("mul_float", "mul_fixed"):
            res, _ = emu.mul(*vals)
        elif op == "halve":
            res, _ = emu.halve(vals[0])
        elif op == "conj":
            res, _ = emu.negate(vals[0])
        elif op == "copy":
            res = vals[0]
        elif op == "mul_by_i":
            n = fmt.bits
            full = vals[0]
            re = full & np.uint64((1 << n) - 1)
            im = full >> np.uint64(n)
            new_re, _ = emu.negate(im)
            res = new_re | (re << np.uint64(n))
        elif op == "swap":
            res = vals[1] | (vals[0] << np.uint64(len(ins[1])))
        else:
            raise ValueError(f"cannot replay arithmetic op {op!r}")
        state[np.ix_(rows, cols_out)] = codes_to_bits(res, cols_out.size)


def replay_sequence(log, shape: tuple[int, int], initial=None, rounding: str = "nearest_even") -> np.ndarray:
    """Re-execute a crossbar log; returns the final ``(rows, cols)`` bit matrix."""
    rows, cols = shape
    state = np.zeros(shape, dtype=np.uint8) if initial is None else np.array(initial, dtype=np.uint8)
    row_idx = np.arange(rows)
    for rec in log:
        kind = rec[0]
        if kind == "load":
            _, r, c, vals = rec
            state[np.ix_(r, c)] = vals
        elif kind == "cwrite":
            _, c, r, vals = rec
            state[np.ix_(r, list(c))] = vals
        elif kind == "rwrite":
            _, r, c, vals = rec
            state[np.ix_(list(r), c)] = vals
        elif kind == "cprog":
            _, prog, mask, offsets = rec
            sel = np.unpackbits(mask.view(np.uint8), bitorder="little")[:rows].astype(bool)
            rr = row_idx[sel]
            for op, a, b, o in prog.gates:
                for off in offsets:
                    x = state[rr, a + off]
                    if op == OP_NOR:
                        x = x | state[rr, b + off]
                    state[rr, o + off] = 1 - x
        elif kind == "rprog":
            _, gates, colptr, colidx = rec
            for g, (op, a, b, o) in enumerate(gates):
                cc = colidx[colptr[g] : colptr[g + 1]]
                x = state[a, cc]
                if op == OP_NOR:
                    x = x | state[b, cc]
                state[o, cc] = 1 - x
        elif kind == "arith":
            _apply_arith(state, rec, rounding)
        else:
            raise ValueError(f"unknown log record {kind!r}")
    return state
