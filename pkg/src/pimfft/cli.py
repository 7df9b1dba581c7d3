"""Command line: ``pimfft {run,sweep,verify}``.

Every flag can also come from an environment variable named after it
(``--memory-gb`` -> ``PIMFFT_MEMORY_GB``); explicit flags win. ``sweep``
accepts comma-separated lists for ``--n --format --config --beta
--partitions --memory-gb`` and runs their cartesian product.

Exit status: 0 pass, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys

from .bench import BenchConfig, SweepError, emit_report, read_sequence_file, run, sweep
from .crossbar import CLOCK_HZ, ConfigurationError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
ENV_PREFIX = "PIMFFT_"
_FORMAT_ALIASES = {"single": "single-complex-64", "half": "half-complex-32"}

# flag -> (default, list-valued in sweep)
_FLAGS = {
    "workload": ("fft", False),
    "n": ("2048", True),
    "format": ("single-complex-64", True),
    "config": ("TwoR", True),
    "beta": ("1", True),
    "partitions": ("1", True),
    "memory-gb": ("8", True),
    "clock-hz": (str(CLOCK_HZ), False),
    "seed": ("0", False),
    "trials": ("1", False),
    "out": (None, False),
    "emit": ("json", False),
    "input": (None, False),
}


def _env_name(flag: str) -> str:
    return ENV_PREFIX + flag.upper().replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pimfft", description="Crossbar FFT and polynomial multiplication benchmarks.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one workload"), ("sweep", "run a grid of workloads"), ("verify", "FFT with bit-exact replay")):
        s = sub.add_parser(name, help=help_)
        for flag in _FLAGS:
            s.add_argument(f"--{flag}", default=None, help=f"(env {_env_name(flag)})")
    return p


def _value(args, flag: str):
    v = getattr(args, flag.replace("-", "_"))
    if v is None:
        v = os.environ.get(_env_name(flag), _FLAGS[flag][0])
    return v


def _split(v: str) -> list[str]:
    return [s.strip() for s in v.split(",") if s.strip()]


def _config(opts: dict) -> BenchConfig:
    try:
        return BenchConfig(
            workload=opts["workload"],
            n=int(opts["n"]),
            format=_FORMAT_ALIASES.get(opts["format"], opts["format"]),
            config=opts["config"],
            beta=int(opts["beta"]),
            partitions=int(opts["partitions"]),
            memory_gb=int(opts["memory-gb"]),
            clock_hz=float(opts["clock-hz"]),
            seed=int(opts["seed"]),
            trials=int(opts["trials"]),
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None


def configs_from_args(args) -> list[BenchConfig]:
    opts = {f: _value(args, f) for f in _FLAGS}
    if args.command == "verify":
        opts["workload"] = "verify"
    if args.command != "sweep":
        return [_config(opts)]
    grid = [_split(opts[f]) if _FLAGS[f][1] else [opts[f]] for f in _FLAGS]
    return [_config(dict(zip(_FLAGS, combo))) for combo in itertools.product(*grid)]


def _emit(reports, args) -> None:
    fmt = _value(args, "emit")
    out = _value(args, "out")
    if out:
        with open(out, "w") as f:
            emit_report(reports, f, fmt)
    else:
        emit_report(reports, sys.stdout, fmt)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfgs = configs_from_args(args)
        if _value(args, "emit") not in ("json", "csv"):
            raise ConfigurationError("--emit must be json or csv")
        if args.command == "sweep":
            try:
                reports = sweep(cfgs)
            except SweepError as exc:
                _emit(exc.partial, args)
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_CONFIG if isinstance(exc.__cause__, ConfigurationError) else EXIT_FAIL
        else:
            values = None
            path = _value(args, "input")
            if path:
                values, _ = read_sequence_file(path)
                if values.size != cfgs[0].n:
                    raise ConfigurationError(f"{path} holds {values.size} values, --n is {cfgs[0].n}")
            reports = [run(cfgs[0], values)]
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(reports, args)
    for r in reports:
        if not r.passed:
            print(
                f"verification failed: {r.workload} n={r.n} rel_l2={r.rel_l2_error:.3e} "
                f"max_abs={r.max_abs_error:.3e} bit_exact={r.bit_exact}",
                file=sys.stderr,
            )
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
