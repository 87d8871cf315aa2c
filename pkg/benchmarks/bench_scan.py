"""Benchmark: compiled band-scan kernel vs the pure-Python fallback.

The band scan is the one scalar hot loop in the package (the solver is
FFT-bound in numpy's compiled transforms, so compiling it would buy
nothing).  This script times both kernel implementations on long sampled
series and on batches of short randomized series, which mirrors the two
production workloads: high-rate solver output and the randomized
combinatorics sweep.

Run:  python benchmarks/bench_scan.py
"""
import time

import numpy as np

from torusgap import _scan_py

try:
    from torusgap import _scan
except ImportError:
    _scan = None


def long_series(n):
    t = np.linspace(0.0, 1.0, n)
    d = 1.5 + np.sin(2 * np.pi * 37 * t) + 0.3 * np.sin(2 * np.pi * 211 * t)
    d[0] = d[-1] = 0.5
    return t, d


def short_batch(count, n=501, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        kt = np.sort(rng.uniform(0, 1, 12))
        kt[0], kt[-1] = 0.0, 1.0
        kd = rng.uniform(0.0, 3.0, 12)
        kd[0] = kd[-1] = 0.5
        t = np.linspace(0.0, 1.0, n)
        out.append((t, np.interp(t, kt, kd)))
    return out


def timeit(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    if _scan is None:
        print("compiled kernel not built; benchmarking the fallback only")
    kernels = [("python", _scan_py)] + ([("cython", _scan)] if _scan else [])

    print(f"{'case':<28} " + " ".join(f"{name:>12}" for name, _ in kernels) + "  speedup")
    for n in (10_000, 100_000, 1_000_000):
        t, d = long_series(n)
        times = [timeit(lambda k=k: (k.scan_band(t, d, 1.0), k.band_integrals(t, d, 1.0)))
                 for _, k in kernels]
        speed = f"{times[0] / times[-1]:10.1f}x" if len(times) > 1 else ""
        print(f"scan+integrals n={n:<9} " + " ".join(f"{x * 1e3:10.2f}ms" for x in times) + speed)

    batch = short_batch(1000)
    times = []
    for _, k in kernels:
        times.append(timeit(lambda k=k: [k.scan_band(t, d, 1.0) for t, d in batch]))
    speed = f"{times[0] / times[-1]:10.1f}x" if len(times) > 1 else ""
    print(f"{'1000 random series':<28} " + " ".join(f"{x * 1e3:10.2f}ms" for x in times) + speed)

    # agreement spot check
    t, d = long_series(100_000)
    if _scan is not None:
        a = _scan.scan_band(t, d, 1.0)
        b = _scan_py.scan_band(t, d, 1.0)
        same = all(np.array_equal(np.asarray(x, float), np.asarray(y, float))
                   for x, y in zip(a, b))
        print(f"kernels agree on 100k-point series: {same}")


if __name__ == "__main__":
    main()
