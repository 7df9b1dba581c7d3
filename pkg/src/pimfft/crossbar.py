"""Memristive crossbar model with stateful NOR/NOT logic and exact cost tracing.

The crossbar is an ``rows x cols`` binary matrix. A column gate evaluates
``out = NOR(a, b)`` (or ``NOT(a)``) in every selected row at once and costs a
single cycle; a row gate does the same along rows for every selected column.
Output-cell initialization is folded into the gate cycle.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .kernels import OP_NOR, OP_NOT

GATE_ENERGY_FJ = 6.4
CLOCK_HZ = 333_333_333


class ConfigurationError(ValueError):
    """Invalid crossbar, partition, plan or benchmark configuration."""


class CrossbarError(ValueError):
    """Illegal operation on a crossbar (bad index, aliasing, partition rule)."""


@dataclass(frozen=True)
class CrossbarDims:
    rows: int = 1024
    cols: int = 1024

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError(f"crossbar dimensions must be positive, got {self.rows}x{self.cols}")


@dataclass(frozen=True)
class PartitionConfig:
    """Contiguous column ranges ``[start, stop)`` that tile the crossbar width."""

    boundaries: tuple[tuple[int, int], ...]

    @classmethod
    def even(cls, cols: int, count: int = 1) -> "PartitionConfig":
        if count < 1 or cols % count:
            raise ConfigurationError(f"cannot split {cols} columns into {count} equal partitions")
        w = cols // count
        return cls(tuple((i * w, (i + 1) * w) for i in range(count)))

    @property
    def count(self) -> int:
        return len(self.boundaries)

    def validate(self, cols: int) -> None:
        pos = 0
        for start, stop in self.boundaries:
            if start != pos or stop <= start:
                raise ConfigurationError(f"partition ranges must be contiguous and disjoint: {self.boundaries}")
            pos = stop
        if pos != cols:
            raise ConfigurationError(f"partitions cover [0, {pos}) but the crossbar has {cols} columns")

    def index_of(self, col: int) -> int:
        for i, (start, stop) in enumerate(self.boundaries):
            if start <= col < stop:
                return i
        raise CrossbarError(f"column {col} outside every partition")


@dataclass
class Trace:
    """Execution counters. Energy counts logic gates only (writes are free)."""

    cycles: int = 0
    gate_ops: int = 0
    column_ops: int = 0
    row_ops: int = 0
    write_ops: int = 0
    flags: Counter = field(default_factory=Counter)

    @property
    def energy_fJ(self) -> float:
        return self.gate_ops * GATE_ENERGY_FJ

    def latency_s(self, clock_hz: float = CLOCK_HZ) -> float:
        return self.cycles / clock_hz

    def copy(self) -> "Trace":
        return Trace(self.cycles, self.gate_ops, self.column_ops, self.row_ops, self.write_ops, Counter(self.flags))

    def __sub__(self, other: "Trace") -> "Trace":
        flags = Counter(self.flags)
        flags.subtract(other.flags)
        return Trace(
            self.cycles - other.cycles,
            self.gate_ops - other.gate_ops,
            self.column_ops - other.column_ops,
            self.row_ops - other.row_ops,
            self.write_ops - other.write_ops,
            +flags,
        )

    def __add__(self, other: "Trace") -> "Trace":
        return Trace(
            self.cycles + other.cycles,
            self.gate_ops + other.gate_ops,
            self.column_ops + other.column_ops,
            self.row_ops + other.row_ops,
            self.write_ops + other.write_ops,
            self.flags + other.flags,
        )

    def as_dict(self) -> dict:
        return {
            "cycles": self.cycles,
            "gate_ops": self.gate_ops,
            "column_ops": self.column_ops,
            "row_ops": self.row_ops,
            "write_ops": self.write_ops,
            "energy_fJ": self.energy_fJ,
            "flags": dict(sorted(self.flags.items())),
        }


class Program:
    """An immutable list of column gates ``(op, a, b, out)``.

    ``flag_cols`` maps diagnostic names to scratch columns whose value is
    inspected host-side (free) after the program runs.
    """

    def __init__(self, gates, name: str = "", flag_cols: dict | None = None, scratch_used: int = 0):
        g = np.asarray(gates, dtype=np.int64).reshape(-1, 4)
        self.gates = g
        self.name = name
        self.flag_cols = dict(flag_cols or {})
        self.scratch_used = scratch_used
        if len(g):
            used = np.concatenate([g[:, 1], g[g[:, 0] == OP_NOR, 2], g[:, 3]])
            self.min_col = int(used.min())
            self.max_col = int(used.max())
            if np.any(g[:, 3] == g[:, 1]) or np.any((g[:, 0] == OP_NOR) & (g[:, 3] == g[:, 2])):
                raise CrossbarError(f"program {name!r}: a gate output coincides with one of its inputs")
        else:
            self.min_col = self.max_col = 0
        self._span_cache: dict = {}

    def __len__(self) -> int:
        return len(self.gates)

    def columns(self) -> np.ndarray:
        g = self.gates
        return np.unique(np.concatenate([g[:, 1], g[g[:, 0] == OP_NOR, 2], g[:, 3]]))

    def spans_partitions(self, parts: PartitionConfig, offset: int = 0) -> bool:
        """True if some gate (shifted by ``offset``) has columns in two partitions."""
        key = (parts, offset)
        if key not in self._span_cache:
            starts = np.array([s for s, _ in parts.boundaries])
            g = self.gates + np.array([0, offset, offset, offset])
            pa = np.searchsorted(starts, g[:, 1], side="right")
            pb = np.where(g[:, 0] == OP_NOR, np.searchsorted(starts, g[:, 2], side="right"), pa)
            po = np.searchsorted(starts, g[:, 3], side="right")
            self._span_cache[key] = bool(np.any(pa != po) or np.any(pb != po))
        return self._span_cache[key]


@dataclass(frozen=True)
class ColumnOp:
    """One column gate for :meth:`Crossbar.parallel_partition_step`."""

    kind: str  # "nor" | "not"
    inputs: tuple[int, ...]
    out: int
    rows: object = None


@dataclass(frozen=True)
class ColumnSegment:
    col: int
    rows: object = None


@dataclass(frozen=True)
class RowSegment:
    row: int
    cols: object = None


def _as_index(sel, n: int, what: str) -> np.ndarray:
    if sel is None:
        return np.arange(n)
    if isinstance(sel, slice):
        return np.arange(n)[sel]
    idx = np.asarray(sel)
    if idx.dtype == bool:
        if idx.shape != (n,):
            raise CrossbarError(f"{what} mask has shape {idx.shape}, expected ({n},)")
        return np.flatnonzero(idx)
    idx = idx.astype(np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise CrossbarError(f"{what} index out of range [0, {n})")
    return idx


class Crossbar:
    """A single crossbar execution stream."""

    def __init__(self, dims: CrossbarDims | None = None, partitions: PartitionConfig | None = None, init=0):
        self.dims = dims or CrossbarDims()
        self.partitions = partitions or PartitionConfig.even(self.dims.cols, 1)
        self.partitions.validate(self.dims.cols)
        self.trace = Trace()
        self.log: list | None = None
        self._nw = kernels.n_words(self.dims.rows)
        self._full_mask = kernels.row_mask(self.dims.rows)
        self._mask_cache: dict = {}
        self._suspend_log = 0
        if np.isscalar(init):
            if init not in (0, 1):
                raise ConfigurationError("bit fill must be 0 or 1")
            self.bits = np.zeros((self.dims.cols, self._nw), dtype=np.uint64)
            if init:
                self.bits[:] = self._full_mask
        else:
            mat = np.asarray(init, dtype=np.uint8)
            if mat.shape != (self.dims.rows, self.dims.cols) or np.any(mat > 1):
                raise ConfigurationError(f"init matrix must be 0/1 with shape {(self.dims.rows, self.dims.cols)}")
            self.bits = kernels.pack_bits(np.ascontiguousarray(mat.T), self._nw)

    @property
    def rows(self) -> int:
        return self.dims.rows

    @property
    def cols(self) -> int:
        return self.dims.cols

    @property
    def state(self) -> np.ndarray:
        """Host copy of the full bit matrix, shape ``(rows, cols)``."""
        return np.ascontiguousarray(kernels.unpack_bits(self.bits, self.rows).T)

    # -- row selection -------------------------------------------------
    def mask_for(self, rows) -> tuple[np.ndarray, int]:
        """Packed mask and active-row count for a row selection."""
        if rows is None:
            return self._full_mask, self.rows
        if isinstance(rows, np.ndarray) and rows.dtype == np.uint64:
            return rows, int(kernels.popcount_rows(rows))
        key = None
        if isinstance(rows, range):
            key = (rows.start, rows.stop, rows.step)
            if key in self._mask_cache:
                return self._mask_cache[key]
        idx = _as_index(rows, self.rows, "row")
        m = kernels.row_mask(self.rows, idx)
        out = (m, int(np.unique(idx).size))
        if key is not None:
            self._mask_cache[key] = out
        return out

    # -- logging -------------------------------------------------------
    def start_log(self) -> list:
        self.log = []
        return self.log

    def _record(self, entry) -> None:
        if self.log is not None and not self._suspend_log:
            self.log.append(entry)

    class _Quiet:
        def __init__(self, xb):
            self.xb = xb

        def __enter__(self):
            self.xb._suspend_log += 1

        def __exit__(self, *exc):
            self.xb._suspend_log -= 1

    def quiet(self):
        """Context manager that suppresses gate-level logging (used by arithmetic ops)."""
        return Crossbar._Quiet(self)

    # -- checks --------------------------------------------------------
    def _check_col(self, c: int) -> None:
        if not 0 <= c < self.cols:
            raise CrossbarError(f"column {c} out of range [0, {self.cols})")

    def _check_row(self, r: int) -> None:
        if not 0 <= r < self.rows:
            raise CrossbarError(f"row {r} out of range [0, {self.rows})")

    # -- column logic --------------------------------------------------
    def run_program(self, prog: Program, rows=None, offsets: Sequence[int] = (0,), bridge: bool = False) -> None:
        """Execute a column program; each gate is one cycle.

        With several ``offsets`` the program runs concurrently in distinct
        partitions (one shifted copy per partition) at the cost of one copy.
        """
        if not len(prog):
            return
        offsets = tuple(int(o) for o in offsets)
        for off in offsets:
            if prog.min_col + off < 0 or prog.max_col + off >= self.cols:
                raise CrossbarError(f"program {prog.name!r} at offset {off} leaves the crossbar")
        if len(offsets) > 1:
            self._check_parallel(prog, offsets)
        elif self.partitions.count > 1 and not bridge and prog.spans_partitions(self.partitions, offsets[0]):
            raise CrossbarError(f"program {prog.name!r} has gates spanning partitions without bridging")
        mask, active = self.mask_for(rows)
        kernels.run_column_program(self.bits, prog.gates, mask, np.asarray(offsets, dtype=np.int64))
        g = len(prog)
        self.trace.cycles += g
        self.trace.column_ops += g
        self.trace.gate_ops += g * active * len(offsets)
        self._record(("cprog", prog, mask.copy(), offsets))
        for name, col in prog.flag_cols.items():
            for off in offsets:
                hits = int(kernels.popcount_rows(self.bits[col + off] & mask))
                if hits:
                    self.trace.flags[name] += hits

    def _check_parallel(self, prog: Program, offsets) -> None:
        seen = set()
        for off in offsets:
            lo = self.partitions.index_of(prog.min_col + off)
            hi = self.partitions.index_of(prog.max_col + off)
            if lo != hi:
                raise CrossbarError(f"parallel copy at offset {off} spans partitions {lo}..{hi}")
            if lo in seen:
                raise CrossbarError(f"two parallel copies target partition {lo}")
            seen.add(lo)

    def nor_columns(self, a: int, b: int, out: int, rows=None) -> None:
        for c in (a, b, out):
            self._check_col(c)
        if out in (a, b) or a == b:
            raise CrossbarError("NOR needs two distinct inputs and a distinct output column")
        self.run_program(Program([(OP_NOR, a, b, out)], "nor"), rows)

    def not_column(self, a: int, out: int, rows=None) -> None:
        for c in (a, out):
            self._check_col(c)
        if out == a:
            raise CrossbarError("NOT output coincides with its input")
        self.run_program(Program([(OP_NOT, a, 0, out)], "not"), rows)

    def parallel_partition_step(self, ops: Sequence[ColumnOp]) -> None:
        """Apply up to ``k`` column gates, one per partition, in a single cycle."""
        if not ops:
            return
        seen = set()
        masks, total = [], 0
        for op in ops:
            cols = tuple(op.inputs) + (op.out,)
            for c in cols:
                self._check_col(c)
            parts = {self.partitions.index_of(c) for c in cols}
            if len(parts) != 1:
                raise CrossbarError(f"gate {op} spans a partition boundary")
            (p,) = parts
            if p in seen:
                raise CrossbarError(f"two gates target partition {p}")
            seen.add(p)
            if op.out in op.inputs or len(set(op.inputs)) != len(op.inputs):
                raise CrossbarError(f"gate {op} aliases its output")
            if (op.kind == "nor") != (len(op.inputs) == 2) or op.kind not in ("nor", "not"):
                raise CrossbarError(f"malformed gate {op}")
            mask, active = self.mask_for(op.rows)
            masks.append(mask)
            total += active
        for op, mask in zip(ops, masks):
            code = OP_NOR if op.kind == "nor" else OP_NOT
            b = op.inputs[1] if code == OP_NOR else 0
            kernels.run_column_program(
                self.bits, np.array([[code, op.inputs[0], b, op.out]], dtype=np.int64), mask, np.zeros(1, dtype=np.int64)
            )
        self.trace.cycles += 1
        self.trace.column_ops += 1
        self.trace.gate_ops += total
        if self.log is not None and not self._suspend_log:
            for op, mask in zip(ops, masks):
                code = OP_NOR if op.kind == "nor" else OP_NOT
                b = op.inputs[1] if code == OP_NOR else 0
                self.log.append(("cprog", Program([(code, op.inputs[0], b, op.out)]), mask.copy(), (0,)))

    # -- row logic -----------------------------------------------------
    def run_row_program(self, gates, col_lists: Sequence) -> None:
        """Execute row gates ``(op, ra, rb, rout)``; gate ``g`` acts on ``col_lists[g]``."""
        gates = np.asarray(gates, dtype=np.int64).reshape(-1, 4)
        if not len(gates):
            return
        ptr = [0]
        idx = []
        for g, cols in zip(gates, col_lists):
            c = _as_index(cols, self.cols, "column")
            for r in (g[1], g[3]) + ((g[2],) if g[0] == OP_NOR else ()):
                self._check_row(int(r))
            if g[3] == g[1] or (g[0] == OP_NOR and (g[3] == g[2] or g[1] == g[2])):
                raise CrossbarError("row gate output coincides with an input row")
            idx.append(c)
            ptr.append(ptr[-1] + c.size)
        if len(idx) != len(gates):
            raise CrossbarError("one column list per row gate is required")
        colptr = np.asarray(ptr, dtype=np.int64)
        colidx = np.concatenate(idx).astype(np.int64) if idx else np.zeros(0, dtype=np.int64)
        kernels.run_row_program(self.bits, gates, colptr, colidx)
        self.trace.cycles += len(gates)
        self.trace.row_ops += len(gates)
        self.trace.gate_ops += int(colptr[-1])
        self._record(("rprog", gates.copy(), colptr, colidx))

    def nor_rows(self, a: int, b: int, out: int, cols=None) -> None:
        self.run_row_program([(OP_NOR, a, b, out)], [cols])

    def not_row(self, a: int, out: int, cols=None) -> None:
        self.run_row_program([(OP_NOT, a, 0, out)], [cols])

    # -- writes and reads ----------------------------------------------
    def write_columns(self, cols: Sequence[int], values: np.ndarray, rows=None) -> None:
        """Write ``values[:, j]`` into column ``cols[j]`` on the selected rows.

        Each column segment is one write step (one cycle, no gate energy).
        """
        cols = [int(c) for c in cols]
        for c in cols:
            self._check_col(c)
        idx = _as_index(rows, self.rows, "row")
        vals = np.asarray(values, dtype=np.uint8).reshape(idx.size, len(cols))
        if np.any(vals > 1):
            raise CrossbarError("write values must be 0/1")
        mask, _ = self.mask_for(idx)
        full = np.zeros((len(cols), self.rows), dtype=np.uint8)
        full[:, idx] = vals.T
        packed = kernels.pack_bits(full, self._nw)
        self.bits[cols] = (self.bits[cols] & ~mask) | (packed & mask)
        self.trace.cycles += len(cols)
        self.trace.write_ops += len(cols)
        self._record(("cwrite", tuple(cols), idx.copy(), vals.copy()))

    def write_rows(self, rows: Sequence[int], values: np.ndarray, cols=None) -> None:
        """Write ``values[j, :]`` into row ``rows[j]`` on the selected columns (one step per row)."""
        cidx = _as_index(cols, self.cols, "column")
        rows = [int(r) for r in rows]
        for r in rows:
            self._check_row(r)
        vals = np.asarray(values, dtype=np.uint8).reshape(len(rows), cidx.size)
        if np.any(vals > 1):
            raise CrossbarError("write values must be 0/1")
        one = np.uint64(1)
        for r, v in zip(rows, vals):
            w, s = r >> 6, np.uint64(r & 63)
            col_words = self.bits[cidx, w]
            col_words = (col_words & ~(one << s)) | (v.astype(np.uint64) << s)
            self.bits[cidx, w] = col_words
        self.trace.cycles += len(rows)
        self.trace.write_ops += len(rows)
        self._record(("rwrite", tuple(rows), cidx.copy(), vals.copy()))

    def write_constant(self, target, bits) -> None:
        """Write a column or row segment (``ColumnSegment`` / ``RowSegment``)."""
        if isinstance(target, ColumnSegment):
            idx = _as_index(target.rows, self.rows, "row")
            vals = np.broadcast_to(np.asarray(bits, dtype=np.uint8), (idx.size,))
            self.write_columns([target.col], vals.reshape(-1, 1), idx)
        elif isinstance(target, RowSegment):
            idx = _as_index(target.cols, self.cols, "column")
            vals = np.broadcast_to(np.asarray(bits, dtype=np.uint8), (idx.size,))
            self.write_rows([target.row], vals.reshape(1, -1), idx)
        else:
            raise CrossbarError(f"unknown write target {target!r}")

    def read_region(self, rows=None, cols=None) -> np.ndarray:
        """Host-side copy of a sub-matrix; not a simulated operation."""
        ridx = _as_index(rows, self.rows, "row")
        cidx = _as_index(cols, self.cols, "column")
        sub = kernels.unpack_bits(self.bits[cidx], self.rows)
        return np.ascontiguousarray(sub[:, ridx].T)

    def read_columns(self, cols: Iterable[int], rows=None) -> np.ndarray:
        return self.read_region(rows, list(cols))

    def load_region(self, rows, cols, values: np.ndarray) -> None:
        """Untimed host-side initialization of a sub-matrix (setup, not a write step)."""
        ridx = _as_index(rows, self.rows, "row")
        cidx = _as_index(cols, self.cols, "column")
        vals = np.asarray(values, dtype=np.uint8).reshape(ridx.size, cidx.size)
        cur = kernels.unpack_bits(self.bits[cidx], self.rows)
        cur[:, ridx] = vals.T
        self.bits[cidx] = kernels.pack_bits(cur, self._nw)
        self._record(("load", ridx.copy(), cidx.copy(), vals.copy()))


def new_crossbar(dims: CrossbarDims | None = None, partitions: PartitionConfig | int | None = None, init=0) -> Crossbar:
    """Create a crossbar; ``partitions`` may be a config or an equal-split count."""
    dims = dims or CrossbarDims()
    if isinstance(partitions, int):
        partitions = PartitionConfig.even(dims.cols, partitions)
    return Crossbar(dims, partitions, init)
