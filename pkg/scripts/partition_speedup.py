"""End-to-end speedup from running the TwoRBeta units in separate partitions.

Prints the per-phase cycle budget for k = 1 and k = beta partitions.
Usage: python3 scripts/partition_speedup.py [--n 4096] [--beta 2] [--format single-complex-64]
"""

import argparse

from pimfft.bench import PHASES, BenchConfig, run


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--beta", type=int, default=2)
    p.add_argument("--format", default="single-complex-64")
    p.add_argument("--cols", type=int, default=1024)
    args = p.parse_args()
    base = BenchConfig(n=args.n, config="TwoRBeta", beta=args.beta, format=args.format, cols=args.cols)
    serial, parallel = run(base), run(base.replace(partitions=args.beta))
    print(f"{'phase':12s} {'k=1':>10s} {'k=' + str(args.beta):>10s}")
    for ph in PHASES:
        a, b = getattr(serial, f"cycles_{ph}"), getattr(parallel, f"cycles_{ph}")
        if a or b:
            print(f"{ph:12s} {a:10d} {b:10d}")
    print(f"{'total':12s} {serial.cycles:10d} {parallel.cycles:10d}")
    print(f"throughput ratio: {parallel.throughput / serial.throughput:.3f}")
    print(f"verification: k=1 {serial.status}, k={args.beta} {parallel.status}")


if __name__ == "__main__":
    main()
