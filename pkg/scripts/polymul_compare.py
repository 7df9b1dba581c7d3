"""Cycles and accuracy of complex and real-packed polynomial multiplication.

Usage: python3 scripts/polymul_compare.py [--sizes 256,512,1024,2048] [--config TwoR]
"""

import argparse

import numpy as np

from pimfft import CrossbarDims, new_crossbar
from pimfft.arith import SINGLE
from pimfft.fft import FFTConfig
from pimfft.oracle import relative_l2, schoolbook_polymul
from pimfft.polymul import PolyOperands, polymul_complex, polymul_real


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="256,512,1024,2048")
    p.add_argument("--config", default="TwoR", choices=("R", "TwoR"))
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    cfg = FFTConfig(args.config)
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>6s} {'complex cycles':>15s} {'real cycles':>12s} {'ratio':>6s} {'real rel_l2':>12s}")
    for n in map(int, args.sizes.split(",")):
        a, b = rng.uniform(-1, 1, n // 2), rng.uniform(-1, 1, n // 2)
        ops = PolyOperands.from_coeffs(a, b, padded_n=n)
        out = {}
        for name, fn in (("complex", polymul_complex), ("real", polymul_real)):
            xb = new_crossbar(CrossbarDims(n // cfg.elements_per_row, 1024))
            out[name] = fn(xb, ops, SINGLE, cfg)
        err = relative_l2(out["real"].coefficients, schoolbook_polymul(a, b))
        c, r = out["complex"].trace.cycles, out["real"].trace.cycles
        print(f"{n:6d} {c:15d} {r:12d} {r / c:6.3f} {err:12.2e}")


if __name__ == "__main__":
    main()
