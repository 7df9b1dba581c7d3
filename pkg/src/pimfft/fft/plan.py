"""FFT configurations, column maps and precomputed stage schedules.

Column map of one block (the whole crossbar, or one partition per unit when
partitions are used)::

    [ region 0: unit u (side 0 | side 1) ... | region 1 ... | twiddle | scratch ]

Each complex element occupies ``Wc = 2N`` columns (real then imaginary). In
R-config side 1 is the partner slot that holds the aligned operand during a
stage. With partitions, unit ``u`` owns partition ``u`` and every partition has
its own twiddle slot and scratch, so one program runs in all of them at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..arith.formats import PRESETS, ComplexSlot, NumberFormat, ScratchLayout
from ..arith.ops import schedule_table
from ..crossbar import ConfigurationError, CrossbarDims
from .layout import Layout, bit_reversal, identity, log2_exact, pair_bit_r, plan_transition, snake

VARIANTS = ("R", "TwoR", "TwoRBeta")


@dataclass(frozen=True)
class FFTConfig:
    """Storage configuration: ``n = r`` (R), ``2r`` (TwoR) or ``2r*beta`` (TwoRBeta)."""

    variant: str = "TwoR"
    beta: int = 1
    use_partitions: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.beta < 1 or self.beta & (self.beta - 1):
            raise ConfigurationError(f"beta must be a positive power of two, got {self.beta}")
        if self.variant != "TwoRBeta" and self.beta != 1:
            raise ConfigurationError(f"{self.variant} has beta = 1")
        if self.use_partitions and self.variant != "TwoRBeta":
            raise ConfigurationError("partitions apply to TwoRBeta only")

    @classmethod
    def R(cls) -> "FFTConfig":
        return cls("R")

    @classmethod
    def TwoR(cls) -> "FFTConfig":
        return cls("TwoR")

    @classmethod
    def TwoRBeta(cls, beta: int, use_partitions: bool = False) -> "FFTConfig":
        return cls("TwoRBeta", beta, use_partitions)

    @property
    def units(self) -> int:
        return self.beta

    @property
    def elements_per_row(self) -> int:
        return 1 if self.variant == "R" else 2 * self.beta

    def n_for(self, rows: int) -> int:
        return rows * self.elements_per_row

    @property
    def name(self) -> str:
        if self.variant == "TwoRBeta":
            return f"TwoRBeta(beta={self.beta}{', partitioned' if self.use_partitions else ''})"
        return self.variant


@dataclass(frozen=True)
class ColumnMap:
    wc: int
    n_bits: int
    units: int
    regions: int
    partitioned: bool
    block: int
    cols: int

    def _unit_origin(self, u: int) -> int:
        return u * self.block if self.partitioned else u * 2 * self.wc

    def _region_stride(self) -> int:
        return 2 * self.wc if self.partitioned else 2 * self.wc * self.units

    def slot(self, q: int, u: int, side: int) -> ComplexSlot:
        base = self._unit_origin(u) + q * self._region_stride() + side * self.wc
        return ComplexSlot.at(base, self.n_bits)

    def slot_by_index(self, q: int, s: int) -> ComplexSlot:
        """Slot index ``s = side + 2 * unit``."""
        return self.slot(q, s >> 1, s & 1)

    def _tw_base(self, u: int) -> int:
        if self.partitioned:
            return u * self.block + self.regions * 2 * self.wc
        return self.regions * 2 * self.wc * self.units

    def twiddle(self, u: int = 0) -> ComplexSlot:
        return ComplexSlot.at(self._tw_base(u), self.n_bits)

    def scratch(self, u: int = 0) -> ScratchLayout:
        start = self._tw_base(u) + self.wc
        stop = (u + 1) * self.block if self.partitioned else self.cols
        return ScratchLayout.span(start, stop)

    def offset(self, u: int) -> int:
        """Column shift from unit 0 to unit ``u`` (partitioned mode)."""
        return self._unit_origin(u) - self._unit_origin(0)

    @property
    def data_columns(self) -> int:
        return self.regions * self.units * 2 * self.wc


@dataclass(frozen=True)
class TwiddleTable:
    """Per stage ``s`` (1-based) the codes of ``w_{2h}^t``, ``h = 2^(s-1)``, ``t < h``."""

    fmt: NumberFormat
    direction: str
    re: tuple[np.ndarray, ...]
    im: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, n: int, fmt: NumberFormat, direction: str) -> "TwiddleTable":
        sign = -1.0 if direction == "forward" else 1.0
        re, im = [], []
        h = 1
        while h < n:
            w = np.exp(sign * 2j * np.pi * np.arange(h) / (2 * h))
            re.append(fmt.encode(w.real))
            im.append(fmt.encode(w.imag))
            h *= 2
        return cls(fmt, direction, tuple(re), tuple(im))

    def values(self, stage: int) -> np.ndarray:
        return self.fmt.decode(self.re[stage - 1]) + 1j * self.fmt.decode(self.im[stage - 1])


@dataclass(frozen=True, eq=False)
class Stage:
    """One butterfly group.

    ``steps``: layout transition applied before the butterflies (two-slot layouts).
    ``pair_bit``: R-config row bit separating the partners.
    ``twiddle_index``: exponent ``t`` of every u-element, shape ``(units, rows)``.
    """

    index: int
    steps: tuple
    layout: Layout
    pair_bit: int | None
    twiddle_index: np.ndarray


@dataclass(frozen=True, eq=False)
class FFTPlan:
    n: int
    dims: CrossbarDims
    fmt: NumberFormat
    config: FFTConfig
    direction: str
    columns: ColumnMap
    region: int
    partitions: int
    input_layout: Layout
    skip_input_permutation: bool
    start_layout: Layout
    stages: tuple[Stage, ...]
    output_layout: Layout
    twiddles: TwiddleTable
    scratch_required: int
    meta: dict = field(default_factory=dict)

    @property
    def log_n(self) -> int:
        return len(self.stages)

    @property
    def wc(self) -> int:
        return self.columns.wc

    @property
    def sequence_columns(self) -> int:
        """Columns holding one stored sequence between stages (R keeps its partner slot free)."""
        return self.config.elements_per_row * self.wc

    def summary(self) -> dict:
        return {
            "n": self.n,
            "config": self.config.name,
            "format": self.fmt.name,
            "direction": self.direction,
            "rows": self.dims.rows,
            "cols": self.dims.cols,
            "partitions": self.partitions,
            "sequence_columns": self.sequence_columns,
            "data_columns": self.columns.data_columns,
            "twiddle_columns": self.wc,
            "scratch_columns_required": self.scratch_required,
            "scratch_columns_available": len(self.columns.scratch(0)),
            "skip_input_permutation": self.skip_input_permutation,
            "stage_steps": [[list(map(str, s)) for s in st.steps] for st in self.stages],
        }


@lru_cache(maxsize=None)
def scratch_requirement(fmt: NumberFormat, regions: int = 1) -> int:
    """Scratch columns needed by the heaviest step (two regions add the polymul steps)."""
    tab = schedule_table(fmt)
    n = fmt.bits
    wc = 2 * n
    arith = max(tab["add_float"]["scratch_columns"], tab["mul_float"]["scratch_columns"])
    butterfly = wc + n + arith  # t = w*v plus the complex_mul temporary
    product = 4 * n + arith  # in-place complex_mul
    unpack = wc + arith
    movement = 3 * wc
    if regions < 2:
        return max(butterfly, movement)
    return max(butterfly, product, unpack, movement)


def default_layout(n: int, config: FFTConfig) -> Layout:
    """Stage-0 layout: one element per row (R) or snake order over ``2*beta`` slots."""
    L = log2_exact(n)
    if config.variant == "R":
        return Layout(identity(L), 0, 0)
    ub = log2_exact(config.beta)
    return Layout(snake(L, 1 + ub), 1, ub)


def _resolve_format(fmt) -> NumberFormat:
    if isinstance(fmt, str):
        key = {"single-complex-64": "single", "half-complex-32": "half"}.get(fmt, fmt)
        if key not in PRESETS:
            raise ConfigurationError(f"unknown format {fmt!r}")
        return PRESETS[key]
    return fmt


def plan_fft(
    n: int,
    dims: CrossbarDims,
    fmt,
    config: FFTConfig,
    direction: str = "forward",
    *,
    skip_input_permutation: bool = False,
    input_layout: Layout | None = None,
    regions: int = 1,
    region: int = 0,
    partitions: int | None = None,
) -> FFTPlan:
    """Validate the geometry and precompute layouts, transitions and twiddles.

    :param n: sequence length (power of two matching ``config`` and ``dims``)
    :param input_layout: placement of the stored sequence (default: stage-0 layout)
    :param skip_input_permutation: relabel instead of moving data; the output is
        then left in the relabeled placement recorded in ``output_layout``
    :param regions: number of sequence regions sharing the crossbar (polymul uses 2)
    :param partitions: partition count when ``config.use_partitions`` (default beta)
    """
    fmt = _resolve_format(fmt)
    if direction not in ("forward", "inverse"):
        raise ConfigurationError(f"direction must be forward or inverse, got {direction!r}")
    if not fmt.is_float:
        raise ConfigurationError("the FFT needs a float format (scaling uses exponent decrements)")
    try:
        L = log2_exact(n)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    if config.n_for(dims.rows) != n:
        raise ConfigurationError(
            f"{config.name} on {dims.rows} rows stores n = {config.n_for(dims.rows)}, not {n}"
        )
    if not 0 <= region < regions:
        raise ConfigurationError(f"region {region} outside [0, {regions})")
    wc = 2 * fmt.bits
    k = 1
    if config.use_partitions:
        k = partitions if partitions is not None else config.beta
        if k < config.beta:
            raise ConfigurationError(f"{config.beta} units need at least {config.beta} partitions, got {k}")
        if dims.cols % k:
            raise ConfigurationError(f"{dims.cols} columns do not split into {k} partitions")
    elif partitions not in (None, 1):
        raise ConfigurationError("partitions requested but the configuration does not use them")
    cm = ColumnMap(wc, fmt.bits, config.units, regions, config.use_partitions, dims.cols // k, dims.cols)
    need = scratch_requirement(fmt, regions)
    have = len(cm.scratch(0))
    if have < need:
        used = cm.block - have
        raise ConfigurationError(
            f"footprint overflow: {used} data/twiddle columns + {need} scratch > {cm.block} columns per "
            f"{'partition' if cm.partitioned else 'crossbar'} ({config.name}, {fmt.name}, n = {n})"
        )

    ref = default_layout(n, config)
    in_layout = input_layout or ref
    if (in_layout.L, in_layout.side_bits, in_layout.unit_bits) != (L, ref.side_bits, ref.unit_bits):
        raise ConfigurationError("input layout does not match the configuration geometry")
    if skip_input_permutation:
        layout = in_layout.relabel(bit_reversal(L))
    else:
        layout = in_layout.with_rows(identity(L))
    start = layout

    rows = dims.rows
    stages = []
    for c in range(L):
        h = 1 << c
        if config.variant == "R":
            kbit = pair_bit_r(layout, c)
            addr = np.arange(rows, dtype=np.int64)
            tw = (layout.index_of(addr) & (h - 1))[None, :]
            stages.append(Stage(c + 1, (), layout, kbit, tw))
        else:
            steps, layout = plan_transition(layout, c)
            sb = layout.slot_bits
            u = np.arange(config.units, dtype=np.int64)[:, None]
            r_ = np.arange(rows, dtype=np.int64)[None, :]
            addr = (u << 1) | (r_ << sb)
            tw = layout.index_of(addr) & (h - 1)
            stages.append(Stage(c + 1, tuple(steps), layout, None, tw))
    return FFTPlan(
        n=n,
        dims=dims,
        fmt=fmt,
        config=config,
        direction=direction,
        columns=cm,
        region=region,
        partitions=k,
        input_layout=in_layout,
        skip_input_permutation=skip_input_permutation,
        start_layout=start,
        stages=tuple(stages),
        output_layout=layout,
        twiddles=TwiddleTable.build(n, fmt, direction),
        scratch_required=need,
    )
