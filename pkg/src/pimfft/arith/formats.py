"""Number formats, host-side encoding and column slots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..crossbar import ConfigurationError


@dataclass(frozen=True)
class NumberFormat:
    """Fixed- or floating-point layout of an ``N``-bit real.

    Floating point is IEEE-754 shaped (sign, biased exponent, mantissa) with
    round-to-nearest-even. Subnormals are not representable: an operand with
    a zero exponent field reads as a signed zero and results that would be
    subnormal are flushed to signed zero. An all-ones exponent field is not
    special-cased by the arithmetic (see ``pimfft.arith.floating``).
    """

    kind: str
    bits: int
    frac_bits: int = 0
    exp_bits: int = 0
    man_bits: int = 0

    def __post_init__(self):
        if self.kind == "float":
            if self.exp_bits < 2 or self.man_bits < 1 or self.bits != 1 + self.exp_bits + self.man_bits:
                raise ConfigurationError(f"unsupported float layout {self}")
            if self.man_bits + 1 > 52:
                raise ConfigurationError("mantissa wider than the host double is unsupported")
        elif self.kind == "fixed":
            if not 1 <= self.bits <= 62 or not 0 <= self.frac_bits < self.bits:
                raise ConfigurationError(f"unsupported fixed layout {self}")
        else:
            raise ConfigurationError(f"unknown number kind {self.kind!r}")

    @classmethod
    def float_(cls, exp_bits: int, man_bits: int) -> "NumberFormat":
        return cls("float", 1 + exp_bits + man_bits, exp_bits=exp_bits, man_bits=man_bits)

    @classmethod
    def fixed(cls, bits: int, frac_bits: int = 0) -> "NumberFormat":
        return cls("fixed", bits, frac_bits=frac_bits)

    @property
    def is_float(self) -> bool:
        return self.kind == "float"

    @property
    def bias(self) -> int:
        return (1 << (self.exp_bits - 1)) - 1

    @property
    def precision(self) -> int:
        return self.man_bits + 1

    @property
    def exp_max_field(self) -> int:
        return (1 << self.exp_bits) - 1

    @property
    def name(self) -> str:
        if self.is_float:
            for k, v in PRESETS.items():
                if v == self:
                    return k
            return f"float{self.bits}e{self.exp_bits}"
        return f"fixed{self.bits}q{self.frac_bits}"

    # -- host encoding ---------------------------------------------------
    def encode(self, values) -> np.ndarray:
        """Round host values into bit patterns (``uint64``)."""
        x = np.asarray(values, dtype=np.float64)
        if self.kind == "fixed":
            q = np.rint(x * (1 << self.frac_bits)).astype(np.int64)
            return (q & ((1 << self.bits) - 1)).astype(np.uint64)
        return _encode_float(x, self)

    def decode(self, codes) -> np.ndarray:
        """Value of each bit pattern as the arithmetic sees it (zero exponent reads as zero)."""
        c = np.asarray(codes, dtype=np.uint64).astype(np.int64)
        if self.kind == "fixed":
            signed = np.where(c >= (1 << (self.bits - 1)), c - (1 << self.bits), c)
            return signed.astype(np.float64) / (1 << self.frac_bits)
        m, e = self.man_bits, self.exp_bits
        man = c & ((1 << m) - 1)
        ex = (c >> m) & ((1 << e) - 1)
        sign = np.where((c >> (m + e)) & 1, -1.0, 1.0)
        mag = np.ldexp((man + (1 << m)).astype(np.float64), (ex - self.bias - m).astype(np.int64))
        mag = np.where(ex == 0, 0.0, mag)
        mag = np.where(ex == self.exp_max_field, np.where(man == 0, np.inf, np.nan), mag)
        return sign * mag

    def round(self, values) -> np.ndarray:
        return self.decode(self.encode(values))

    def fields(self, codes):
        """Split float codes into (sign, exponent field, mantissa field) int64 arrays."""
        c = np.asarray(codes, dtype=np.uint64).astype(np.int64)
        m, e = self.man_bits, self.exp_bits
        return (c >> (m + e)) & 1, (c >> m) & ((1 << e) - 1), c & ((1 << m) - 1)


def _encode_float(x: np.ndarray, fmt: NumberFormat) -> np.ndarray:
    p, m, e = fmt.precision, fmt.man_bits, fmt.exp_bits
    sign = np.signbit(x).astype(np.int64)
    ax = np.abs(x)
    frac, ex = np.frexp(ax)  # ax = frac * 2**ex, frac in [0.5, 1)
    sig = np.rint(np.ldexp(frac, p)).astype(np.int64)  # exact scaling, round-half-even
    carry = sig >> p
    sig = np.where(carry > 0, sig >> 1, sig)
    ex = ex + carry
    efield = ex - 1 + fmt.bias
    man = sig & ((1 << m) - 1)
    zero = (ax == 0) | (efield <= 0)
    inf = np.isinf(ax) | (efield >= fmt.exp_max_field)
    nan = np.isnan(x)
    efield = np.where(zero, 0, np.where(inf | nan, fmt.exp_max_field, efield))
    man = np.where(zero | inf, 0, np.where(nan, 1 << (m - 1), man))
    code = (sign << (m + e)) | (efield << m) | man
    return code.astype(np.uint64)


SINGLE = NumberFormat.float_(8, 23)
HALF = NumberFormat.float_(5, 10)
PRESETS = {"single": SINGLE, "half": HALF}


def codes_to_bits(codes, width: int) -> np.ndarray:
    """``(k,)`` codes -> ``(k, width)`` 0/1 matrix, LSB first."""
    c = np.asarray(codes, dtype=np.uint64).reshape(-1, 1)
    return ((c >> np.arange(width, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)


def bits_to_codes(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint64)
    return (b << np.arange(b.shape[1], dtype=np.uint64)).sum(axis=1, dtype=np.uint64)


@dataclass(frozen=True)
class RealSlot:
    """``width`` contiguous columns starting at ``base``; bit ``i`` lives in ``base + i``."""

    base: int
    width: int

    @property
    def cols(self) -> tuple[int, ...]:
        return tuple(range(self.base, self.base + self.width))

    def shifted(self, off: int) -> "RealSlot":
        return RealSlot(self.base + off, self.width)


@dataclass(frozen=True)
class ComplexSlot:
    """Real part then imaginary part, each an ``N``-column real slot."""

    re: RealSlot
    im: RealSlot

    def __post_init__(self):
        if self.re.width != self.im.width:
            raise ConfigurationError("real and imaginary widths differ")
        if set(self.re.cols) & set(self.im.cols):
            raise ConfigurationError("real and imaginary columns overlap")

    @classmethod
    def at(cls, base: int, n_bits: int) -> "ComplexSlot":
        return cls(RealSlot(base, n_bits), RealSlot(base + n_bits, n_bits))

    @property
    def width(self) -> int:
        return self.re.width

    @property
    def cols(self) -> tuple[int, ...]:
        return self.re.cols + self.im.cols

    def shifted(self, off: int) -> "ComplexSlot":
        return ComplexSlot(self.re.shifted(off), self.im.shifted(off))


@dataclass(frozen=True)
class ScratchLayout:
    """Columns available to an operation for carries and intermediates."""

    cols: tuple[int, ...]

    @classmethod
    def span(cls, start: int, stop: int) -> "ScratchLayout":
        return cls(tuple(range(start, stop)))

    def check_disjoint(self, *slots) -> None:
        mine = set(self.cols)
        for s in slots:
            if mine & set(s.cols):
                raise ConfigurationError(f"scratch overlaps operand columns {sorted(mine & set(s.cols))[:4]}...")

    def __len__(self) -> int:
        return len(self.cols)
