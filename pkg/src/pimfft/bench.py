"""Benchmark harness: simulate one crossbar instance, verify it, extrapolate to a batched memory.

One workload instance runs on one simulated crossbar. The batched figures
assume every crossbar of the memory runs the same program on its own data:
``throughput = crossbar_count * batch_per_crossbar / latency``. Power is the
dynamic gate power only (``energy_per_instance * throughput``); peripheral and
static power are not modeled.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .crossbar import CLOCK_HZ, GATE_ENERGY_FJ, ConfigurationError, CrossbarDims, Trace, new_crossbar
from .fft import engine
from .fft.plan import FFTConfig, _resolve_format, plan_fft
from .oracle import host_fft, host_ifft, relative_l2, replay_sequence, schoolbook_polymul
from .polymul import PolyOperands, polymul_complex, polymul_real

WORKLOADS = ("fft", "ifft", "polymul-complex", "polymul-real", "verify")
FORMATS = ("single-complex-64", "half-complex-32")
MEMORY_GB = (8, 40)
TOLERANCE = {"single": 1e-4, "half": 2e-2}
POWER_NOTE = "dynamic gate power only; peripheral and static power excluded"
PHASES = ("permutation", "movement", "twiddle", "butterfly", "scale", "unpack", "product")


class VerificationError(RuntimeError):
    """Raised by callers that treat a failed verification as an error."""


class SweepError(RuntimeError):
    """A sweep member failed; ``partial`` holds the reports completed before it."""

    def __init__(self, message: str, partial: list, failed: "BenchConfig"):
        super().__init__(message)
        self.partial = partial
        self.failed = failed


@dataclass(frozen=True)
class BenchConfig:
    """One benchmark run.

    :param n: transform length (polymul: padded length, operands hold ``n // 2`` coefficients)
    :param partitions: ``k``; ``k > 1`` runs the TwoRBeta units in parallel partitions
    :param rows, cols: physical crossbar size used for the crossbar count
    """

    workload: str = "fft"
    n: int = 2048
    format: str = "single-complex-64"
    config: str = "TwoR"
    beta: int = 1
    partitions: int = 1
    memory_gb: int = 8
    rows: int = 1024
    cols: int = 1024
    clock_hz: float = CLOCK_HZ
    seed: int = 0
    trials: int = 1

    def __post_init__(self):
        if self.workload not in WORKLOADS:
            raise ConfigurationError(f"workload must be one of {WORKLOADS}, got {self.workload!r}")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.memory_gb not in MEMORY_GB:
            raise ConfigurationError(f"memory_gb must be one of {MEMORY_GB}, got {self.memory_gb}")
        if self.partitions < 1:
            raise ConfigurationError(f"partitions must be >= 1, got {self.partitions}")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if self.clock_hz <= 0:
            raise ConfigurationError("clock_hz must be positive")
        if self.rows < 1 or self.cols < 1 or (self.rows * self.cols) % 8:
            raise ConfigurationError(f"invalid crossbar size {self.rows}x{self.cols}")
        fft_config = self.fft_config  # validates variant, beta and partitions
        if self.simulated_rows > self.rows:
            raise ConfigurationError(
                f"{fft_config.name} needs {self.simulated_rows} rows for n = {self.n}; the crossbar has {self.rows}"
            )

    @property
    def fft_config(self) -> FFTConfig:
        return FFTConfig(self.config, self.beta, self.partitions > 1)

    @property
    def simulated_rows(self) -> int:
        epr = self.fft_config.elements_per_row
        if self.n < epr or self.n % epr:
            raise ConfigurationError(f"n = {self.n} does not fill whole rows of {self.fft_config.name}")
        return self.n // epr

    @property
    def number_format(self):
        return _resolve_format(self.format)

    @property
    def crossbar_count(self) -> int:
        return (self.memory_gb << 30) // (self.rows * self.cols // 8)

    def replace(self, **kw) -> "BenchConfig":
        return dataclasses.replace(self, **kw)


@dataclass
class Report:
    """Counters of one instance and the derived batched figures.

    Every derived field is recomputable from ``cycles``, ``gate_ops``,
    ``clock_hz``, ``crossbar_count`` and ``batch_per_crossbar``.
    """

    workload: str
    n: int
    format: str
    config: str
    beta: int
    partitions: int
    memory_gb: int
    rows: int
    cols: int
    rows_used: int
    clock_hz: float
    seed: int
    trials: int
    cycles: int
    gate_ops: int
    column_ops: int
    row_ops: int
    write_ops: int
    energy_fJ_per_instance: float
    latency_s: float
    crossbar_count: int
    batch_per_crossbar: int
    throughput: float
    power_W: float
    throughput_per_watt: float
    status: str
    tolerance: float
    rel_l2_error: float
    max_abs_error: float
    bit_exact: str
    imag_residue: float
    cycles_permutation: int = 0
    cycles_movement: int = 0
    cycles_twiddle: int = 0
    cycles_butterfly: int = 0
    cycles_scale: int = 0
    cycles_unpack: int = 0
    cycles_product: int = 0
    power_note: str = POWER_NOTE

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        kw = {}
        for f in dataclasses.fields(cls):
            v = d[f.name]
            kw[f.name] = _TYPES[f.type](v) if isinstance(v, str) and f.type != "str" else v
        return cls(**kw)


_TYPES = {"int": int, "float": float, "str": str}
CSV_COLUMNS = tuple(f.name for f in dataclasses.fields(Report))


def derive(cfg: BenchConfig, trace: Trace, batch_per_crossbar: int = 1) -> dict:
    """Batched figures from one instance's trace."""
    energy = trace.gate_ops * GATE_ENERGY_FJ
    latency = trace.cycles / cfg.clock_hz
    count = cfg.crossbar_count
    throughput = count * batch_per_crossbar / latency if latency else math.inf
    power = energy * 1e-15 * throughput
    return {
        "energy_fJ_per_instance": energy,
        "latency_s": latency,
        "crossbar_count": count,
        "batch_per_crossbar": batch_per_crossbar,
        "throughput": throughput,
        "power_W": power,
        "throughput_per_watt": throughput / power if power else math.inf,
    }


# -- workloads ------------------------------------------------------------------
def _random_complex(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size) + 1j * rng.uniform(-1.0, 1.0, size)


def _new_xbar(cfg: BenchConfig):
    dims = CrossbarDims(cfg.simulated_rows, cfg.cols)
    return dims, new_crossbar(dims, cfg.partitions if cfg.partitions > 1 else None)


def _run_transform(cfg: BenchConfig, values, replay: bool) -> tuple[Trace, dict, dict]:
    fmt = cfg.number_format
    direction = "inverse" if cfg.workload == "ifft" else "forward"
    dims, xb = _new_xbar(cfg)
    plan = plan_fft(cfg.n, dims, fmt, cfg.fft_config, direction,
                    partitions=cfg.partitions if cfg.partitions > 1 else None)
    log = xb.start_log() if replay else None
    engine.load_sequence(xb, plan, values)
    xq = engine.read_sequence(xb, plan, plan.input_layout)
    stats: dict = {}
    trace = engine.run_fft(xb, plan, stats)
    y = engine.read_sequence(xb, plan)
    ref = host_ifft(xq) if direction == "inverse" else host_fft(xq)
    check = {"rel": relative_l2(y, ref), "abs": float(np.max(np.abs(y - ref))), "residue": 0.0}
    if replay:
        data = plan.columns.data_columns
        image = replay_sequence(log, (xb.rows, xb.cols))
        check["exact"] = bool(np.array_equal(image[:, :data], xb.state[:, :data]))
    return trace, stats, check


def _run_polymul(cfg: BenchConfig, rng: np.random.Generator) -> tuple[Trace, dict, dict]:
    m = cfg.n // 2
    real = cfg.workload == "polymul-real"
    if real:
        a, b = rng.uniform(-1.0, 1.0, m), rng.uniform(-1.0, 1.0, m)
    else:
        a, b = _random_complex(rng, m), _random_complex(rng, m)
    ops_ = PolyOperands.from_coeffs(a, b, padded_n=cfg.n)
    _, xb = _new_xbar(cfg)
    fn = polymul_real if real else polymul_complex
    res = fn(xb, ops_, cfg.number_format, cfg.fft_config)
    ref = schoolbook_polymul(a, b)
    c = res.coefficients
    check = {"rel": relative_l2(c, ref), "abs": float(np.max(np.abs(c - ref))), "residue": res.imag_residue}
    return res.trace, res.stats, check


def _phase_cycles(stats: dict) -> dict:
    return {f"cycles_{p}": int(stats[p].cycles) if p in stats else 0 for p in PHASES}


def run(cfg: BenchConfig, values=None) -> Report:
    """Simulate ``cfg.trials`` instances (seeded inputs unless ``values`` is given) and report.

    Cycle and gate counts do not depend on the data; the report carries those of
    the first trial and the worst error over all trials.
    """
    rng = np.random.default_rng(cfg.seed)
    fmt = cfg.number_format
    tol = TOLERANCE[fmt.name]
    replay = cfg.workload == "verify"
    first = None
    worst_rel = worst_abs = residue = 0.0
    exact = "n/a" if not replay else "true"
    for t in range(cfg.trials):
        if cfg.workload.startswith("polymul"):
            trace, stats, check = _run_polymul(cfg, rng)
        else:
            x = _random_complex(rng, cfg.n) if values is None or t else np.asarray(values, dtype=np.complex128)
            trace, stats, check = _run_transform(cfg, x, replay)
            if replay and not check["exact"]:
                exact = "false"
        if first is None:
            first = (trace, stats)
        elif (trace.cycles, trace.gate_ops) != (first[0].cycles, first[0].gate_ops):
            raise RuntimeError("cycle count depends on the input data")
        worst_rel = max(worst_rel, check["rel"])
        worst_abs = max(worst_abs, check["abs"])
        residue = max(residue, check["residue"])
    trace, stats = first
    ok = worst_rel <= tol and exact != "false"
    return Report(
        workload=cfg.workload, n=cfg.n, format=cfg.format, config=cfg.config, beta=cfg.beta,
        partitions=cfg.partitions, memory_gb=cfg.memory_gb, rows=cfg.rows, cols=cfg.cols,
        rows_used=cfg.simulated_rows, clock_hz=float(cfg.clock_hz), seed=cfg.seed, trials=cfg.trials,
        cycles=trace.cycles, gate_ops=trace.gate_ops, column_ops=trace.column_ops, row_ops=trace.row_ops,
        write_ops=trace.write_ops, **derive(cfg, trace),
        status="pass" if ok else "fail", tolerance=tol, rel_l2_error=float(worst_rel),
        max_abs_error=float(worst_abs), bit_exact=exact, imag_residue=float(residue),
        **_phase_cycles(stats),
    )


def sweep(configs) -> list[Report]:
    """Run every config in order; a failing member raises :class:`SweepError` with the partial list."""
    reports: list[Report] = []
    for cfg in configs:
        try:
            reports.append(run(cfg))
        except Exception as exc:
            raise SweepError(f"sweep aborted at {cfg}: {exc}", reports, cfg) from exc
    return reports


# -- serialization ----------------------------------------------------------------
def _csv_value(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def emit_report(reports, sink, fmt: str = "json") -> None:
    """Write one report or a list of reports to a text stream.

    JSON is a list of objects in :data:`CSV_COLUMNS` order; CSV has the header
    :data:`CSV_COLUMNS`. Floats use ``repr`` so both round-trip exactly.
    """
    if isinstance(reports, Report):
        reports = [reports]
    if fmt == "json":
        json.dump([r.to_dict() for r in reports], sink, indent=2)
        sink.write("\n")
    elif fmt == "csv":
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            d = r.to_dict()
            w.writerow([_csv_value(d[c]) for c in CSV_COLUMNS])
    else:
        raise ConfigurationError(f"emit format must be json or csv, got {fmt!r}")


def load_reports(text: str, fmt: str = "json") -> list[Report]:
    if fmt == "json":
        return [Report.from_dict(d) for d in json.loads(text)]
    rows = list(csv.DictReader(io.StringIO(text)))
    return [Report.from_dict(d) for d in rows]


# -- sequence files ----------------------------------------------------------------
def write_sequence_file(path, values, fmt: str = "single-complex-64") -> None:
    """Header ``n format``, then one ``re im`` pair per line."""
    v = np.asarray(values, dtype=np.complex128).reshape(-1)
    with open(path, "w") as f:
        f.write(f"{v.size} {fmt}\n")
        for z in v:
            f.write(f"{float(z.real)!r} {float(z.imag)!r}\n")


def read_sequence_file(path) -> tuple[np.ndarray, str]:
    with open(path) as f:
        head = f.readline().split()
        if len(head) != 2:
            raise ConfigurationError(f"{path}: header must be 'n format'")
        n, fmt = int(head[0]), head[1]
        try:
            data = np.loadtxt(f, dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise ConfigurationError(f"{path}: {exc}") from None
    if data.shape != (n, 2):
        raise ConfigurationError(f"{path}: expected {n} lines of 're im', got shape {data.shape}")
    return data[:, 0] + 1j * data[:, 1], fmt
