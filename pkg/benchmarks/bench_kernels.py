"""Compare the numba and numpy backends of the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on identical inputs (and identical random streams) with both
backends; the table lists the best wall time per call and checks that the
outputs agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from shotfield import _kernels
from shotfield._accel import HAVE_NUMBA
from shotfield.pointproc import Window, dpp_build


def best_time(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    rng = np.random.default_rng(0)
    for lam in (30.0, 100.0, 300.0):
        model = dpp_build(lam, 0.5, Window(1, 0.8 + 8 * dpp_build(lam, 0.5, Window(1, 10.0)).bandwidth))
        freqs = model.freqs[rng.random(len(model.beta)) < model.beta]
        yield (f"projection DPP, rank {len(freqs)}",
               lambda use, f=freqs, L=model.window.L: _kernels.projection_sample(
                   f, L, np.random.default_rng(1), use_numba=use))
    for n, m in ((10_000, 1), (100_000, 1), (20_000, 400)):
        pts = rng.random((n, 1)) * 10.0
        amps = rng.exponential(size=n)
        q = rng.random((m, 1)) * 10.0
        yield (f"field sum, {n} points x {m} queries",
               lambda use, p=pts, a=amps, q=q: _kernels.bucketed_field(
                   p, a, q, _kernels.GAUSS_BUMP, 1.0, 0.1, 0.526, 10.0, use_numba=use))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy backend can run")
    print(f"{'kernel':42s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}  agree")
    for name, fn in cases():
        t_np, out_np = best_time(lambda: fn(False), args.repeat)
        if HAVE_NUMBA:
            t_nb, out_nb = best_time(lambda: fn(True), args.repeat)
            agree = np.allclose(out_np, out_nb, rtol=1e-12, atol=1e-12)
            print(f"{name:42s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.1f}x  {agree}")
        else:
            print(f"{name:42s} {1e3 * t_np:11.2f} {'-':>11s} {'-':>8s}  -")


if __name__ == "__main__":
    main()
