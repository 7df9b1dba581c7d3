"""Per-phase and per-operation cycle budget of one FFT, for comparing against published throughput.

Usage: python3 scripts/cycle_budget.py [--n 2048] [--config TwoR] [--format single-complex-64]
"""

import argparse

from pimfft.arith import schedule_table
from pimfft.bench import PHASES, BenchConfig, run


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=2048)
    p.add_argument("--config", default="TwoR")
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--format", default="single-complex-64")
    p.add_argument("--reference", type=float, default=3.65e7, help="throughput to compare with (FFT/s)")
    args = p.parse_args()
    cfg = BenchConfig(n=args.n, config=args.config, beta=args.beta, format=args.format)
    r = run(cfg)
    print(f"{cfg.fft_config.name} n={r.n} {r.format}: {r.cycles} cycles, {r.throughput:.3e} FFT/s, "
          f"{r.throughput / args.reference:.2f}x reference")
    for ph in PHASES:
        c = getattr(r, f"cycles_{ph}")
        if c:
            print(f"  {ph:12s} {c:9d} ({100 * c / r.cycles:5.1f}%)")
    print("gate schedules (cycles per row-parallel operation):")
    for op, row in schedule_table(cfg.number_format).items():
        print(f"  {op:16s} {row['cycles']:6d} cycles, {row['scratch_columns']:4d} scratch columns")


if __name__ == "__main__":
    main()
