"""Compare the compiled and pure-numpy kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times the fused loss+gradient kernel and the lifted forward map for each
backend and for the size-based dispatcher ("auto"), then one full
amplitude-flow solve per backend.
"""
import argparse
import timeit

import numpy as np

from amplitude_pr import kernels, make_ensemble, sample_matrix
from amplitude_pr import solvers

SHAPES = [(64, 8), (128, 8), (256, 16), (1024, 16), (4096, 64)]


def _time(fn, repeat, number=10):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number * 1e6


def _solve_ms(A, b, mod, repeat):
    saved, limit = kernels._impl, kernels.COMPILED_MAX_ENTRIES
    kernels._impl, kernels.COMPILED_MAX_ENTRIES = mod, 1 << 62
    try:
        return _time(lambda: solvers.amplitude_flow(A, b), max(3, repeat // 10), 1) / 1e3
    finally:
        kernels._impl, kernels.COMPILED_MAX_ENTRIES = saved, limit


def bench(repeat):
    py = kernels.python_module()
    cy = kernels.compiled_module()
    if cy is None:
        print("compiled kernels unavailable; only the python backend is built")
        return
    rng = np.random.default_rng(0)
    dist = make_ensemble("complex-gaussian")
    print(f"dispatch threshold: {kernels.COMPILED_MAX_ENTRIES} entries")
    print(f"{'kernel':<10}{'m':>6}{'d':>5}{'python us':>11}{'cython us':>11}"
          f"{'auto us':>10}{'cy/py':>8}")
    for m, d in SHAPES:
        B = sample_matrix(dist, m, d, 1).B
        x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        b = np.abs(B @ rng.standard_normal(d)) + 0.01
        u = x[::-1].copy()
        for name, fname, args, auto in (
            ("gradient", "amplitude_gradient", (B, b, x, 0.0),
             lambda: kernels.amplitude_gradient(B, b, x)),
            ("lifted", "lifted_forward", (B, x, u, 0.6, -0.8),
             lambda: kernels.lifted_forward(B, x, u, 0.6, -0.8)),
        ):
            tp = _time(lambda: getattr(py, fname)(*args), repeat)
            tc = _time(lambda: getattr(cy, fname)(*args), repeat)
            ta = _time(auto, repeat)
            print(f"{name:<10}{m:>6}{d:>5}{tp:>11.1f}{tc:>11.1f}{ta:>10.1f}{tp / tc:>8.2f}")

    for m, d in ((128, 8), (1024, 16)):
        A = sample_matrix(dist, m, d, 2)
        x0 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        b = np.abs(A.forward(x0))
        tp, tc = _solve_ms(A, b, py, repeat), _solve_ms(A, b, cy, repeat)
        print(f"amplitude_flow m={m} d={d}: python {tp:.1f} ms, cython {tc:.1f} ms, "
              f"speedup {tp / tc:.2f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=30)
    bench(ap.parse_args().repeat)
