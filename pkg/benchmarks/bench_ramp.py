#!/usr/bin/env python3
"""Benchmark the compiled ramp-kernel loops against the numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_ramp.py

Sizes mirror the real workload: projecting a 201x201 phase-space grid onto
161 voltage bins for 12 LO phases (the inner loop of the balanced-homodyne
bound), plus the counts-side backprojection used by the estimator.
"""

import time

import numpy as np

from cvtomo import invradon


def timed(fn, *args, repeat=3, **kwargs):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    n_nodes, n_comp, n_x, kc = 201 * 201, 5, 161, 6.0
    xi = rng.normal(scale=5.0, size=n_nodes)
    comps = rng.normal(size=(n_comp, n_nodes))
    xbins = np.linspace(-8.0, 8.0, n_x)
    weights = rng.uniform(0.0, 100.0, size=n_x)
    fallback = invradon.numpy_backend()

    rows = []
    cases = [
        ("project (grid->bins)", lambda be: invradon.project_components(
            xi, comps, xbins, kc, backend=be)),
        ("backproject (bins->grid)", lambda be: invradon.backproject_counts(
            xi, xbins, kc, weights, backend=be)),
    ]
    for label, call in cases:
        t_np = timed(call, fallback)
        if invradon.COMPILED_KERNEL:
            t_cy = timed(call, None)
            rows.append((label, t_cy, t_np, t_np / t_cy))
        else:
            rows.append((label, float("nan"), t_np, float("nan")))

    print(f"compiled kernel available: {invradon.COMPILED_KERNEL}")
    print(f"{'case':28s} {'compiled[s]':>12s} {'numpy[s]':>12s} {'speedup':>8s}")
    for label, t_cy, t_np, ratio in rows:
        print(f"{label:28s} {t_cy:12.4f} {t_np:12.4f} {ratio:8.2f}")


if __name__ == "__main__":
    main()
