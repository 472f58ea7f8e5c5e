"""Compiled vs pure-numpy kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best-of-N time for each backend and
the speed ratio.  Backends missing on this install are skipped.
"""

import argparse
import timeit

import numpy as np

from cceval.estimators import gaussian_kernel
from cceval.kernels import backends


def cases(rng):
    img = rng.random((256, 256, 3))
    k = gaussian_kernel(2.0, 1)
    lab1 = np.column_stack([rng.uniform(0, 100, 200_000), rng.uniform(-80, 80, (200_000, 2))])
    lab2 = lab1 + rng.normal(0, 5, lab1.shape)
    vals = rng.random((256 * 256, 3))
    w = rng.random(256 * 256)
    return {
        "correlate1d_reflect 256x256x3 sigma=2": lambda m: m.correlate1d_reflect(img, k, 0),
        "ciede2000 200k pairs": lambda m: m.ciede2000(lab1, lab2, 1.0, 1.0, 1.0),
        "power_sums 65k px p=6 weighted": lambda m: m.power_sums(vals, w, 6.0),
        "power_sums 65k px p=inf": lambda m: m.power_sums(vals, None, np.inf),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mods = backends()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<40}" + "".join(f"{n:>12}" for n in mods) + f"{'ratio':>10}")
    for name, fn in cases(rng).items():
        times = {}
        for bname, mod in mods.items():
            times[bname] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        cells = "".join(f"{times[b] * 1e3:>10.2f}ms" for b in mods)
        ratio = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{name:<40}{cells}{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
