"""Throughput and throughput-per-watt of the FFT across lengths, formats and configurations.

Usage: python3 scripts/throughput_sweep.py [--out sweep.csv] [--max-n 2048]
"""

import argparse
import sys

from pimfft.bench import BenchConfig, emit_report, sweep

CONFIGS = [("R", 1, 1), ("TwoR", 1, 1), ("TwoRBeta", 2, 1), ("TwoRBeta", 2, 2)]


def grid(max_n: int, memory_gb: int):
    for fmt in ("single-complex-64", "half-complex-32"):
        for config, beta, parts in CONFIGS:
            epr = 1 if config == "R" else 2 * beta
            n = 8 * epr
            while n <= max_n and n // epr <= 1024:
                yield BenchConfig(workload="fft", n=n, format=fmt, config=config, beta=beta,
                                  partitions=parts, memory_gb=memory_gb)
                n *= 2


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--max-n", type=int, default=2048)
    p.add_argument("--memory-gb", type=int, default=8, choices=(8, 40))
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    args = p.parse_args()
    reports = sweep(list(grid(args.max_n, args.memory_gb)))
    if args.out:
        with open(args.out, "w") as f:
            emit_report(reports, f, "csv")
    else:
        emit_report(reports, sys.stdout, "csv")
    for r in reports:
        print(f"{r.config:9s} beta={r.beta} k={r.partitions} {r.format:18s} n={r.n:5d} "
              f"cycles={r.cycles:9d} {r.throughput:.3e} FFT/s {r.throughput_per_watt:.3e} FFT/s/W",
              file=sys.stderr)


if __name__ == "__main__":
    main()
