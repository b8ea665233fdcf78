"""Compare the compiled and pure-numpy kernel paths.

Run with ``python3 benchmarks/bench_kernels.py``; pass ``--quick`` for a
short smoke run.  Both paths are imported directly, so the
``BORDERRANK_DISABLE_JIT`` setting does not matter here.
"""

import argparse
import timeit

import numpy as np

from borderrank import kernels


def _best_per_call(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def _cases(rng):
    X = rng.standard_normal((8, 8, 8))
    B, C = rng.standard_normal((8, 3)), rng.standard_normal((8, 3))
    U, V, W = (rng.standard_normal((8, 3)) for _ in range(3))
    T = rng.standard_normal((100_000, 2, 2, 2))
    G3 = np.zeros((2, 2, 2))
    G3[0, 0, 0] = G3[0, 1, 1] = G3[1, 0, 1] = 1.0
    G3[1, 1, 0] = -1.0
    start = [rng.standard_normal((2, 2)) for _ in range(3)]

    def sweeps(fn):
        def run():
            A, B2, C2 = (np.ascontiguousarray(S.copy()) for S in start)
            fn(G3, A, B2, C2, 500, 0.0, 0.0, -1.0, 1e-12, 1e12)
        return run

    return [
        ("mttkrp3 8x8x8 r=3", lambda: kernels.mttkrp3_jit(X, B, C, 0),
         lambda: kernels.mttkrp3_numpy(X, B, C, 0)),
        ("cp_full3 8x8x8 r=3", lambda: kernels.cp_full3_jit(U, V, W),
         lambda: kernels.cp_full3_numpy(U, V, W)),
        ("delta_batch 100k", lambda: kernels.delta_batch_jit(T),
         lambda: kernels.delta_batch_numpy(T)),
        ("als3 500 sweeps G3 r=2", sweeps(kernels.als3_sweeps_jit),
         sweeps(kernels.als3_sweeps_numpy)),
    ]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--quick", action="store_true")
    args = p.parse_args(argv)
    repeat, number = (2, 3) if args.quick else (5, 20)
    if not kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy path exists")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, jit_fn, np_fn in _cases(rng):
        jit_fn()  # compile outside the timed region
        t_jit = _best_per_call(jit_fn, repeat, number)
        t_np = _best_per_call(np_fn, repeat, max(1, number // 4))
        print(f"{name:<26}{t_jit * 1e3:>10.3f}ms{t_np * 1e3:>10.3f}ms{t_np / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
