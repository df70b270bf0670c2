"""Time the compiled kernels against the pure-numpy fallback.

Runs bilinear sampling and the red-black flow sweep at a few sizes, checks
the outputs are bit-identical, and prints best-of-N wall times.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --repeats 20 --sizes 256 512 1024
"""

import argparse
import time

import numpy as np

from sphereflow.kernels import _fallback

try:
    from sphereflow.kernels import _native
except ImportError:
    _native = None


def best_of(fn, repeats):
    fn()  # warmup
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_bilinear(side, repeats, rng):
    img = rng.standard_normal((side, 2 * side))
    n = side * side
    rows = rng.uniform(-2.0, side + 1.0, n)
    cols = rng.uniform(-2.0, 2 * side + 1.0, n)

    ref = _fallback.bilinear_sample_1d(img, rows, cols, _fallback.MODE_SPHERE)
    out = _native.bilinear_sample_1d(img, rows, cols, _native.MODE_SPHERE)
    assert np.array_equal(ref, np.asarray(out)), "backends disagree"

    t_fb = best_of(
        lambda: _fallback.bilinear_sample_1d(img, rows, cols, 1), repeats
    )
    t_nat = best_of(
        lambda: _native.bilinear_sample_1d(img, rows, cols, 1), repeats
    )
    return t_fb, t_nat


def bench_sweep(side, repeats, rng):
    shape = (side, side)
    ix = rng.standard_normal(shape)
    iy = rng.standard_normal(shape)
    it = rng.standard_normal(shape)
    u0 = rng.standard_normal(shape)
    v0 = rng.standard_normal(shape)

    def run(mod):
        u = u0.copy()
        v = v0.copy()
        for color in (0, 1, 0, 1):
            mod.hs_sweep(u, v, ix, iy, it, 100.0, color)
        return u, v

    ur, vr = run(_fallback)
    un, vn = run(_native)
    assert np.array_equal(ur, un) and np.array_equal(vr, vn), "backends disagree"

    t_fb = best_of(lambda: run(_fallback), repeats)
    t_nat = best_of(lambda: run(_native), repeats)
    return t_fb, t_nat


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512])
    ap.add_argument("--repeats", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if _native is None:
        raise SystemExit(
            "compiled extension not available; build with pip install -e ."
        )

    rng = np.random.default_rng(args.seed)
    header = f"{'kernel':<22}{'size':>6}{'fallback':>12}{'native':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for side in args.sizes:
        t_fb, t_nat = bench_bilinear(side, args.repeats, rng)
        print(
            f"{'bilinear_sample':<22}{side:>6}{t_fb * 1e3:>10.2f}ms"
            f"{t_nat * 1e3:>10.2f}ms{t_fb / t_nat:>8.1f}x"
        )
        t_fb, t_nat = bench_sweep(side, args.repeats, rng)
        print(
            f"{'hs_sweep x4':<22}{side:>6}{t_fb * 1e3:>10.2f}ms"
            f"{t_nat * 1e3:>10.2f}ms{t_fb / t_nat:>8.1f}x"
        )
    print("outputs bit-identical across backends")


if __name__ == "__main__":
    main()
