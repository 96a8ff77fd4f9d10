#!/usr/bin/env python3
"""Compare the compiled kernel backend against the NumPy fallback.

Times the hot kernels on benchmark-sized workloads and checks that the two
backends agree numerically. Run from the repository root:

    python benchmarks/backend_bench.py
"""
import time

import numpy as np

from pisto.backend import available_backends


def timeit(fn, repeat=7):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_case(name, backends, make_args, calls):
    rows = []
    args = make_args()
    outputs = {}
    for bname, mod in backends.items():
        fn = getattr(mod, name)
        outputs[bname] = fn(*args)
        rows.append((bname, timeit(lambda: [fn(*args) for _ in range(calls)]) / calls))
    if len(outputs) == 2:
        a, b = outputs["numpy"], outputs["compiled"]
        if isinstance(a, tuple):
            agree = all(
                np.allclose(x, y, rtol=1e-12, atol=1e-12, equal_nan=True)
                for x, y in zip(a, b)
            )
        else:
            agree = np.allclose(a, b, rtol=1e-12, atol=1e-12)
    else:
        agree = None
    return rows, agree


def main():
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    rng = np.random.default_rng(0)

    circles = np.column_stack(
        [rng.uniform(0, 1, 4), rng.uniform(0, 1, 4), rng.uniform(0.05, 0.15, 4)]
    )
    mins = rng.uniform(0, 0.7, (3, 2))
    boxes = np.column_stack([mins, mins + rng.uniform(0.1, 0.25, (3, 2))])
    paths = rng.uniform(0, 1, (65, 32, 2))

    pm_u = rng.uniform(-2, 2, (128, 40, 2))
    pend_u = rng.uniform(-2.5, 2.5, (128, 60, 1))
    cart_u = rng.uniform(-10, 10, (128, 60, 1))

    cases = [
        ("scene_stats", lambda: (paths, circles, boxes, 0.04), 50),
        ("rollout_costs_point_mass",
         lambda: (pm_u, np.zeros(4), np.array([0.1, 1.0, 0.5, 1.0, 0.01])), 20),
        ("rollout_costs_pendulum",
         lambda: (pend_u, np.zeros(2), np.array([0.1, 9.81, 1.0, 1.0, 1.0, 0.1, 0.01])), 20),
        ("rollout_costs_cartpole",
         lambda: (cart_u, np.array([0.0, 0.0, 0.2, 0.0]),
                  np.array([0.05, 9.81, 1.0, 0.1, 0.5, 10.0, 1.0, 0.01])), 20),
    ]

    print(f"{'kernel':28s} {'backend':9s} {'time/call':>12s} {'speedup':>9s}")
    for name, make_args, calls in cases:
        rows, agree = bench_case(name, backends, make_args, calls)
        base = dict(rows).get("numpy")
        for bname, t in rows:
            speedup = f"{base / t:7.1f}x" if (base and bname == "compiled") else ""
            print(f"{name:28s} {bname:9s} {t * 1e6:10.1f} us {speedup:>9s}")
        if agree is not None:
            print(f"{'':28s} backends agree: {agree}")


if __name__ == "__main__":
    main()
