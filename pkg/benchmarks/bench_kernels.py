"""Compare the compiled kernel core against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from sonosim._kernels import _fallback

try:
    from sonosim._kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    mu = rng.uniform(0, 0.05, size=(512, 3072))
    imp = rng.choice([1.4, 1.63, 7.8], size=(512, 3072))
    img = rng.standard_normal((512, 3072))
    sigmas = np.linspace(0.75, 2.5, 3072)
    u = rng.uniform(0, 511, size=512 * 708)
    z = rng.uniform(0, 3071, size=512 * 708)

    cases = [
        ("transmission_and_boundaries (512x3072)",
         lambda m: m.transmission_and_boundaries(mu, imp, 4.0)),
        ("sample_polar bilinear (362k pts)",
         lambda m: m.sample_polar(img, u, z)),
        ("depth_lateral_blur (512x3072)",
         lambda m: m.depth_lateral_blur(img, sigmas)),
    ]

    print(f"{'kernel':45s}{'python':>12s}{'compiled':>12s}{'speedup':>10s}")
    for name, fn in cases:
        t_py = timeit(lambda: fn(_fallback), args.repeats)
        if _core is None:
            print(f"{name:45s}{t_py * 1e3:10.1f} ms{'n/a':>12s}{'':>10s}")
            continue
        t_c = timeit(lambda: fn(_core), args.repeats)
        print(f"{name:45s}{t_py * 1e3:10.1f} ms{t_c * 1e3:10.1f} ms"
              f"{t_py / t_c:9.1f}x")


if __name__ == "__main__":
    main()
