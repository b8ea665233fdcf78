import os
import subprocess
import sys

import numpy as np
import pytest

from borderrank import kernels
from borderrank.rank222 import delta
from borderrank.tensor_core import tensor

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


def _factors(rng, shape, r):
    return [np.ascontiguousarray(rng.standard_normal((d, r))) for d in shape]


class TestNumpyKernels:
    def test_mttkrp_against_unfolding(self, rng):
        X = rng.standard_normal((3, 4, 5))
        A, B, C = _factors(rng, X.shape, 2)
        expected0 = X.reshape(3, -1) @ np.einsum("jr,kr->jkr", B, C).reshape(-1, 2)
        assert np.allclose(kernels.mttkrp3_numpy(X, B, C, 0), expected0)
        expected2 = np.moveaxis(X, 2, 0).reshape(5, -1) @ np.einsum("ir,jr->ijr", A, B).reshape(-1, 2)
        assert np.allclose(kernels.mttkrp3_numpy(X, A, B, 2), expected2)

    def test_cp_full_sum_of_outers(self, rng):
        U, V, W = _factors(rng, (2, 3, 4), 3)
        expected = sum(np.multiply.outer(np.multiply.outer(U[:, c], V[:, c]), W[:, c]) for c in range(3))
        assert np.allclose(kernels.cp_full3_numpy(U, V, W), expected)

    def test_delta_batch_matches_scalar(self, rng):
        T = rng.integers(-3, 4, size=(50, 2, 2, 2))
        got = kernels.delta_batch_numpy(T.astype(float))
        for i in range(50):
            assert got[i] == float(delta(tensor(T[i])))


@needs_numba
class TestPathsAgree:
    def test_mttkrp(self, rng):
        X = rng.standard_normal((3, 4, 5))
        A, B, C = _factors(rng, X.shape, 3)
        for mode, (P, Q) in enumerate([(B, C), (A, C), (A, B)]):
            assert np.allclose(kernels.mttkrp3_jit(X, P, Q, mode), kernels.mttkrp3_numpy(X, P, Q, mode),
                               rtol=1e-13, atol=1e-13)

    def test_cp_full(self, rng):
        U, V, W = _factors(rng, (4, 3, 2), 5)
        assert np.allclose(kernels.cp_full3_jit(U, V, W), kernels.cp_full3_numpy(U, V, W), rtol=1e-13)

    def test_delta_batch(self, rng):
        T = rng.standard_normal((1000, 2, 2, 2))
        assert np.allclose(kernels.delta_batch_jit(T), kernels.delta_batch_numpy(T), rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("shape,r", [((2, 2, 2), 2), ((3, 4, 2), 3), ((3, 3, 3), 1)])
    def test_als_sweeps(self, rng, shape, r):
        X = rng.standard_normal(shape)
        f1 = _factors(rng, shape, r)
        f2 = [U.copy() for U in f1]
        out1 = kernels.als3_sweeps_jit(X, *f1, 40, 1e-12, 0.0, -1.0, 1e-12, 1e12)
        out2 = kernels.als3_sweeps_numpy(X, *f2, 40, 1e-12, 0.0, -1.0, 1e-12, 1e12)
        assert out1[0] == out2[0] and out1[1] == out2[1]
        assert np.allclose(out1[2], out2[2], rtol=1e-8)
        assert np.allclose(out1[3], out2[3], rtol=1e-6)
        for U1, U2 in zip(f1, f2):
            assert np.allclose(U1, U2, rtol=1e-6, atol=1e-9)

    def test_als_stops_on_tolerance(self, rng):
        X = np.zeros((2, 2, 2))
        X[0, 0, 0] = X[1, 1, 1] = 1.0
        f = _factors(rng, (2, 2, 2), 2)
        done, stopped, res, _, _ = kernels.als3_sweeps_jit(X, *f, 500, 1e-10, 1e-15, -1.0, 1e-12, 1e12)
        assert stopped and done < 500 and res[-1] < 1e-8


def _backend_with(env_value):
    env = dict(os.environ)
    env["BORDERRANK_DISABLE_JIT"] = env_value
    out = subprocess.run(
        [sys.executable, "-c", "from borderrank import kernels; print(kernels.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    return out.stdout.strip()


@pytest.mark.parametrize("value", ["1", "true", "YES", "on"])
def test_env_flag_disables_jit(value):
    assert _backend_with(value) == "numpy"


@needs_numba
def test_jit_active_by_default():
    assert _backend_with("") == "numba"
    assert _backend_with("0") == "numba"


@needs_numba
def test_benchmark_runs(capsys):
    import runpy
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    runpy.run_path(str(script), run_name="bench")["main"](["--quick"])
    out = capsys.readouterr().out
    assert "delta_batch" in out and "speedup" in out
