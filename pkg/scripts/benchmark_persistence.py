#!/usr/bin/env python3
"""Time complex construction, reduction and cycle extraction on random volumes.

    python3 scripts/benchmark_persistence.py 32 64 128 --sigma 0 2
"""

import argparse
import time

import numpy as np
from scipy import ndimage

from topomask.cubical import build_complex
from topomask.persistence import compute_diagram, extract_cycles
from topomask.volume import Volume3D


def bench(n: int, sigma: float, seed: int = 0) -> dict:
    a = np.random.default_rng(seed).random((n, n, n))
    if sigma > 0:
        a = ndimage.gaussian_filter(a, sigma)
    v = Volume3D(a.astype(np.float32))
    t0 = time.perf_counter()
    c = build_complex(v)
    t1 = time.perf_counter()
    res = compute_diagram(c)
    t2 = time.perf_counter()
    n_cyc = sum(len(extract_cycles(res, p, include_zero_persistence=False)) for p in (1, 2))
    t3 = time.perf_counter()
    return {"n": n, "sigma": sigma, "build": t1 - t0, "diagram": t2 - t1, "cycles": t3 - t2,
            "pairs": len(res.diagram), "cycles_n": n_cyc}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("sizes", type=int, nargs="*", default=[32, 64, 128])
    ap.add_argument("--sigma", type=float, nargs="*", default=[0.0])
    args = ap.parse_args()
    bench(6, 0.0)  # JIT warm-up
    print(f"{'n':>4} {'sigma':>5} {'build':>7} {'diagram':>8} {'cycles':>7} {'total':>7} {'pairs':>9} {'cycles':>8}")
    for n in args.sizes:
        for s in args.sigma:
            r = bench(n, s)
            tot = r["build"] + r["diagram"] + r["cycles"]
            print(f"{n:4d} {s:5.1f} {r['build']:7.2f} {r['diagram']:8.2f} {r['cycles']:7.2f} {tot:7.2f} "
                  f"{r['pairs']:9d} {r['cycles_n']:8d}")


if __name__ == "__main__":
    main()
