"""Timing comparison of the compiled and pure-NumPy kernel backends.

    python benchmarks/bench_kernels.py [--steps 200000] [--batch 100000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from qutrit_je import kernels
from qutrit_je.protocol import Schedule, coefficients


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--batch", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    s = Schedule.from_microseconds(200)
    dt = s.tau / args.steps
    a, b, g = coefficients((np.arange(args.steps) + 0.5) * dt, s)
    rng = np.random.default_rng(0)
    m = rng.normal(size=(args.batch, 3, 3)) + 1j * rng.normal(size=(args.batch, 3, 3))
    herm = (m + np.conj(np.swapaxes(m, 1, 2))) / 2
    psi0 = np.array([1.0, 0.0, 0.0], dtype=complex)

    results = {}
    print(f"{'backend':<8} {'propagate':>12} {'evolve':>12} {'eigh_batch':>12}")
    for name in kernels.available_backends():
        mod = kernels.load_backend(name)
        tp, u = best_of(lambda: mod.propagate_coeffs(a, b, g, dt), args.repeat)
        te, _ = best_of(lambda: mod.evolve_coeffs(a, b, g, dt, psi0), args.repeat)
        th, w = best_of(lambda: mod.eigh_batch(herm), args.repeat)
        results[name] = (tp, te, th, u, w)
        print(f"{name:<8} {tp:>11.3f}s {te:>11.3f}s {th:>11.3f}s")
    if len(results) == 2:
        c, p = results["cython"], results["python"]
        print(f"speed-up  {p[0] / c[0]:>11.1f}x {p[1] / c[1]:>11.1f}x {p[2] / c[2]:>11.1f}x")
        print(f"max |U_cython - U_python| = {np.abs(c[3] - p[3]).max():.2e}")
        print(f"max eigenvalue difference = {np.abs(c[4][0] - p[4][0]).max():.2e}")


if __name__ == "__main__":
    main()
