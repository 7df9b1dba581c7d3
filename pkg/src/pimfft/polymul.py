"""Polynomial multiplication through the convolution theorem.

``c = IDFT(DFT(a) * DFT(b))`` with both transforms and the element-wise product
executed on the crossbar. The input permutations are skipped: the forward
transforms leave their output in bit-reversed placement, which is exactly
the placement the inverse transform needs without its own permutation.

For real coefficients the two forward transforms are merged: ``z = a + i b``
is transformed once and separated with
``A_k = (conj(Z_{n-k}) + Z_k) / 2`` and ``B_k = i (conj(Z_{n-k}) - Z_k) / 2``
(indices mod ``n``, so ``Z_n = Z_0``), using only copies, swaps, sign flips,
``mul_by_i``, exponent decrements and complex add/sub.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arith import ops
from .arith.formats import ComplexSlot, ScratchLayout
from .crossbar import ConfigurationError, Crossbar, Trace
from .fft import engine
from .fft.layout import log2_exact
from .fft.plan import FFTConfig, FFTPlan, _resolve_format, plan_fft

MODES = ("acyclic", "cyclic")


@dataclass(frozen=True, eq=False)
class PolyOperands:
    """Coefficient lists (lowest degree first) and the transform length."""

    a: np.ndarray
    b: np.ndarray
    padded_n: int
    mode: str = "acyclic"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.a.ndim != 1 or self.b.ndim != 1 or not self.a.size or not self.b.size:
            raise ConfigurationError("operands must be non-empty 1-D coefficient lists")
        try:
            log2_exact(self.padded_n)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        if self.mode == "acyclic" and self.padded_n < self.product_length:
            raise ConfigurationError(f"acyclic product needs padded_n >= {self.product_length}, got {self.padded_n}")
        if self.mode == "cyclic" and not (self.a.size == self.b.size == self.padded_n):
            raise ConfigurationError("cyclic mode needs both operands of length padded_n")

    @classmethod
    def from_coeffs(cls, a, b, mode: str = "acyclic", padded_n: int | None = None) -> "PolyOperands":
        a = np.asarray(a)
        b = np.asarray(b)
        if padded_n is None:
            need = a.size + b.size - 1 if mode == "acyclic" else a.size
            padded_n = 1 << max(0, (need - 1).bit_length())
        return cls(a, b, padded_n, mode)

    @property
    def product_length(self) -> int:
        return self.a.size + self.b.size - 1 if self.mode == "acyclic" else self.padded_n

    @property
    def is_real(self) -> bool:
        return not (np.iscomplexobj(self.a) and np.any(self.a.imag)) and not (np.iscomplexobj(self.b) and np.any(self.b.imag))

    def padded(self) -> tuple[np.ndarray, np.ndarray]:
        pa = np.zeros(self.padded_n, dtype=np.complex128)
        pb = np.zeros(self.padded_n, dtype=np.complex128)
        pa[: self.a.size] = self.a
        pb[: self.b.size] = self.b
        return pa, pb


@dataclass(eq=False)
class PolyResult:
    """Product coefficients and the timed trace; unpacks as ``(coefficients, trace)``."""

    coefficients: np.ndarray
    trace: Trace
    imag_residue: float = 0.0
    stats: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.coefficients, self.trace))


# -- helpers ------------------------------------------------------------------------
def _plans(xb: Crossbar, n: int, fmt, config: FFTConfig, skip: bool):
    kw = dict(skip_input_permutation=skip, regions=2, partitions=xb.partitions.count if config.use_partitions else None)
    pa = plan_fft(n, xb.dims, fmt, config, "forward", region=0, **kw)
    pb = plan_fft(n, xb.dims, fmt, config, "forward", region=1, **kw)
    return pa, pb


def _inverse_plan(xb: Crossbar, fwd: FFTPlan, skip: bool) -> FFTPlan:
    return plan_fft(
        fwd.n, xb.dims, fwd.fmt, fwd.config, "inverse",
        skip_input_permutation=skip, input_layout=fwd.output_layout, regions=2, region=0,
        partitions=xb.partitions.count if fwd.config.use_partitions else None,
    )


def _slot_groups(plan: FFTPlan):
    """``(unit, side, offsets)`` groups covering every element slot; partitions run in parallel."""
    cm = plan.columns
    if plan.config.variant == "R":
        return [(0, 0, (0,))]
    if cm.partitioned:
        offs = tuple(cm.offset(u) for u in range(plan.config.units))
        return [(0, side, offs) for side in (0, 1)]
    return [(u, side, (0,)) for u in range(plan.config.units) for side in (0, 1)]


def spectrum_product(xb: Crossbar, plan: FFTPlan) -> None:
    """Region 0 <- region 0 * region 1, one complex_mul per element slot."""
    cm = plan.columns
    for u, side, offs in _slot_groups(plan):
        ops.complex_mul(xb, cm.slot(0, u, side), cm.slot(1, u, side), cm.slot(0, u, side), None,
                        fmt=plan.fmt, scratch=cm.scratch(0), offsets=offs)


def pack_real_pair(xb: Crossbar, plan: FFTPlan, x, y) -> None:
    """Store ``z = x + i y`` in the plan's region (host-side fusion, untimed)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ConfigurationError("packed sequences must have equal length")
    engine.load_sequence(xb, plan, x + 1j * y)


def _region_plan(xb: Crossbar, plan: FFTPlan, region: int) -> FFTPlan:
    return plan_fft(
        plan.n, xb.dims, plan.fmt, plan.config, plan.direction,
        skip_input_permutation=plan.skip_input_permutation, input_layout=plan.input_layout,
        regions=plan.columns.regions, region=region,
        partitions=plan.partitions if plan.config.use_partitions else None,
    )


def unpack_real_pair(xb: Crossbar, plan: FFTPlan) -> FFTPlan:
    """Split the spectrum ``Z`` held in region 0 into ``X`` (region 0) and ``Y`` (region 1).

    Both spectra keep ``plan.output_layout``; the returned plan addresses region 1.
    """
    if plan.columns.regions < 2 or plan.region != 0:
        raise ConfigurationError("unpacking needs a two-region plan on region 0")
    cm, fmt, n = plan.columns, plan.fmt, plan.n
    plan_w = _region_plan(xb, plan, 1)
    lay = plan.output_layout
    groups = _slot_groups(plan)
    sc = cm.scratch(0)
    wc = cm.wc
    tmp = ComplexSlot.at(sc.cols[0], fmt.bits)
    rest = ScratchLayout(sc.cols[wc:])
    # W = conj(Z[(n - k) mod n])
    for u, side, offs in groups:
        ops.copy_slot(xb, cm.slot(0, u, side), cm.slot(1, u, side), None, fmt=fmt, scratch=sc, offsets=offs)
    if n > 2:
        engine.move_sequence(xb, plan_w, lay, lay, (-np.arange(n)) % n)
    for u, side, offs in groups:
        ops.conjugate_in_place(xb, cm.slot(1, u, side), None, fmt=fmt, scratch=sc, offsets=offs)
    # X = (W + Z) / 2, Y = i (W - Z) / 2
    for u, side, offs in groups:
        z, w = cm.slot(0, u, side), cm.slot(1, u, side)
        kw = dict(fmt=fmt, scratch=rest, offsets=offs)
        ops.complex_sub(xb, w, z, tmp, None, **kw)
        ops.complex_add(xb, w, z, z, None, **kw)
        ops.halve(xb, z, None, **kw)
        ops.mul_by_i(xb, tmp, None, out=w, **kw)
        ops.halve(xb, w, None, **kw)
    return plan_w


def _finish(xb, operands, inv: FFTPlan, before: Trace, stats) -> tuple[np.ndarray, Trace]:
    out = engine.read_sequence(xb, inv)
    return out[: operands.product_length], xb.trace - before


def polymul_complex(xb: Crossbar, operands: PolyOperands, fmt, config: FFTConfig, *, skip_permutation: bool = True) -> PolyResult:
    """FFT(a), FFT(b), element-wise product, IFFT; returns the product coefficients."""
    fmt = _resolve_format(fmt)
    n = operands.padded_n
    pa, pb = _plans(xb, n, fmt, config, skip_permutation)
    va, vb = operands.padded()
    engine.load_sequence(xb, pa, va)
    engine.load_sequence(xb, pb, vb)
    before = xb.trace.copy()
    stats: dict = {}
    engine.run_fft(xb, pa, stats)
    engine.run_fft(xb, pb, stats)
    with engine._Phase(xb, stats, "product"):
        spectrum_product(xb, pa)
    inv = _inverse_plan(xb, pa, skip_permutation)
    engine.run_fft(xb, inv, stats)
    coeffs, trace = _finish(xb, operands, inv, before, stats)
    return PolyResult(coeffs, trace, float(np.max(np.abs(coeffs.imag), initial=0.0)) if operands.is_real else 0.0, stats)


def polymul_real(xb: Crossbar, operands: PolyOperands, fmt, config: FFTConfig, *, skip_permutation: bool = True) -> PolyResult:
    """Pack ``a + i b``, one FFT, unpack, product, IFFT; returns real parts.

    ``imag_residue`` is the largest magnitude of the discarded imaginary parts.
    """
    if not operands.is_real:
        raise ConfigurationError("polymul_real needs real coefficients")
    fmt = _resolve_format(fmt)
    n = operands.padded_n
    pa, _ = _plans(xb, n, fmt, config, skip_permutation)
    va, vb = operands.padded()
    pack_real_pair(xb, pa, va.real, vb.real)
    before = xb.trace.copy()
    stats: dict = {}
    engine.run_fft(xb, pa, stats)
    with engine._Phase(xb, stats, "unpack"):
        unpack_real_pair(xb, pa)
    with engine._Phase(xb, stats, "product"):
        spectrum_product(xb, pa)
    inv = _inverse_plan(xb, pa, skip_permutation)
    engine.run_fft(xb, inv, stats)
    coeffs, trace = _finish(xb, operands, inv, before, stats)
    residue = float(np.max(np.abs(coeffs.imag), initial=0.0))
    return PolyResult(coeffs.real.copy(), trace, residue, stats)
