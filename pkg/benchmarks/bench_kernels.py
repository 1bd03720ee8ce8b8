"""Compiled vs numpy kernels on the characteristic-curve minimization.

    python benchmarks/bench_kernels.py [--repeat 5] [--starts 128]

Prints per-call timings for both backends and the largest value difference.
"""

import argparse
import time

import numpy as np

from qutrit_roof import kernels

POINTS = [(0.0, 0.0), (0.5, 0.5), (0.2, 0.7), (0.9, 0.3), (1.0, 0.6), (0.3, 0.15)]


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(backend, starts, repeat, ndim):
    mod = kernels.get_backend(backend)
    rng = np.random.default_rng(0)
    x0 = rng.uniform(-np.pi, np.pi, size=(starts, ndim))
    times, values = [], []
    for rbar, z in POINTS:
        t, res = _time(lambda: mod.minimize_angles(rbar, z, x0), repeat)
        times.append(t)
        values.append(res[1])
    ang = rng.uniform(-np.pi, np.pi, size=ndim)
    t_eval, _ = _time(lambda: [mod.elin_angles_grad(0.4, 0.6, ang) for _ in range(1000)], repeat)
    return np.array(times), np.array(values), t_eval / 1000


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--starts", type=int, default=128)
    args = p.parse_args()
    available = ["python"]
    try:
        kernels.get_backend("cython")
        available.insert(0, "cython")
    except ImportError:
        print("compiled kernels not built; timing the numpy fallback only")
    for ndim, label in ((2, "reduced"), (4, "full")):
        res = {b: bench(b, args.starts, args.repeat, ndim) for b in available}
        print(f"{label} chart, {args.starts} starts per point")
        for b, (t, v, te) in res.items():
            print(f"  {b:7s} minimize {1e3 * t.mean():8.2f} ms/point   value+grad {1e6 * te:7.2f} us/call")
        if len(res) == 2:
            diff = np.max(np.abs(res["cython"][1] - res["python"][1]))
            speed = res["python"][0].mean() / res["cython"][0].mean()
            print(f"  speedup {speed:.1f}x, max |value difference| {diff:.2e}")


if __name__ == "__main__":
    main()
