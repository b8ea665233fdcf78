import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from borderrank.approx import (
    GENERATORS,
    HALF_SQUARED_NORM,
    NEG_ENTROPY,
    CpModel,
    FitTrace,
    als_cp,
    best_rank1,
    bregman,
    degeneracy_report,
    weak_rank2,
)
from borderrank.constructions import dsl_sequence, random_orbit_sample
from borderrank.errors import DimensionError
from borderrank.rank222 import OrbitClass, classify222, delta_extended
from borderrank.tensor_core import outer_product, tensor

from conftest import float_arrays, random_orthogonal

E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
UNIT = (E1, E2, E1, E2, E1, E2)


def _rank1(rng, shape):
    return outer_product([rng.standard_normal(d) for d in shape])


def _residual(A, model):
    return (A.to_float() - model.evaluate()).norm()


class TestCpModel:
    def test_from_factors_normalises(self, rng):
        factors = [rng.standard_normal((d, 3)) for d in (2, 3, 4)]
        m = CpModel.from_factors(factors)
        for U in m.factors:
            assert np.allclose(np.linalg.norm(U, axis=0), 1.0)
        assert np.all(m.coefficients >= 0) and m.rank == 3 and m.shape == (2, 3, 4)
        raw = np.einsum("ir,jr,kr->ijk", *factors)
        assert np.allclose(m.evaluate().array, raw)

    def test_json(self, rng):
        m = CpModel.from_factors([rng.standard_normal((2, 2)) for _ in range(3)])
        js = m.to_json()
        assert js["rank"] == 2 and len(js["factors"]) == 3 and len(js["factors"][0]) == 2


class TestAls:
    def test_exact_rank_two(self):
        A = tensor(np.zeros((2, 2, 2)))
        A = outer_product([E1, E1, E1]) + outer_product([E2, E2, E2])
        model, trace = als_cp(A, 2, seed=0)
        assert trace.final_residual < 1e-10
        assert _residual(A, model) < 1e-10

    def test_order_four_uses_generic_path(self, rng):
        A = _rank1(rng, (2, 3, 2, 2)) + _rank1(rng, (2, 3, 2, 2))
        model, trace = als_cp(A, 2, seed=1, max_iter=3000)
        assert _residual(A, model) < 1e-6 * A.norm()

    def test_deterministic(self, rng):
        A = tensor(rng.standard_normal((3, 3, 3)))
        m1, t1 = als_cp(A, 2, seed=7, max_iter=200)
        m2, t2 = als_cp(A, 2, seed=7, max_iter=200)
        assert t1.residual == t2.residual
        assert np.array_equal(m1.coefficients, m2.coefficients)

    @settings(max_examples=25)
    @given(float_arrays((3, 2, 2)), st.integers(1, 3), st.integers(0, 1000))
    def test_residual_non_increasing(self, X, r, seed):
        _, trace = als_cp(X, r, seed=seed, max_iter=300)
        res = np.array(trace.residual)
        scale = max(np.linalg.norm(X), 1.0)
        assert np.all(np.diff(res) <= 1e-9 * scale)

    def test_invalid(self):
        with pytest.raises(ValueError):
            als_cp(np.ones((2, 2, 2)), 0)
        with pytest.raises(DimensionError):
            als_cp(np.ones(3), 1)

    def test_trace_shapes(self, rng):
        _, trace = als_cp(tensor(rng.standard_normal((2, 3, 4))), 2, seed=0, max_iter=50)
        L = trace.lambda_matrix()
        assert L.shape == (len(trace), 2) and np.all(L >= 0)
        assert len(trace.cosines[0]) == 3 and len(trace.elapsed_ms) == len(trace)


class TestBestRank1:
    def test_decomposable_recovered(self, rng):
        A = _rank1(rng, (3, 2, 4))
        model, trace = best_rank1(A, seed=0)
        assert trace.final_residual < 1e-10 * A.norm()
        assert model.coefficients[0] == pytest.approx(A.norm(), rel=1e-12)

    def test_stationarity(self, rng):
        for _ in range(20):
            shape = tuple(rng.integers(2, 5, size=3))
            A = tensor(rng.standard_normal(shape))
            model, trace = best_rank1(A, seed=1)
            lam = model.coefficients[0]
            nA = A.norm()
            assert lam <= nA * (1 + 1e-12)
            assert abs(trace.final_residual ** 2 - (nA ** 2 - lam ** 2)) <= 1e-8 * nA ** 2

    def test_orthogonal_invariance(self, rng):
        A = tensor(rng.standard_normal((3, 3, 3)))
        Q = [random_orthogonal(rng, 3) for _ in range(3)]
        B = tensor(np.einsum("ia,jb,kc,abc->ijk", *Q, A.array))
        la = best_rank1(A, seed=0)[0].coefficients[0]
        lb = best_rank1(B, seed=0)[0].coefficients[0]
        assert la == pytest.approx(lb, rel=1e-8)

    def test_zero_tensor(self):
        model, trace = best_rank1(np.zeros((2, 2, 2)))
        assert model.coefficients[0] == 0 and trace.final_residual == 0


class TestWeakRank2:
    def test_rank_two_input_uses_two_terms(self):
        A = outer_product([E1, E1, E1]) + outer_product([E2, E2, E2])
        model, trace = weak_rank2(A, seed=0, restarts=2)
        assert model.family == "two-term" and trace.final_residual < 1e-10

    def test_boundary_input_uses_three_terms(self):
        A = dsl_sequence(*UNIT).limit
        model, trace = weak_rank2(A, seed=0, restarts=2)
        assert model.family == "three-term-boundary" and trace.final_residual < 1e-8
        assert np.allclose(model.evaluate().array, A.to_float().array, atol=1e-8)

    @pytest.mark.parametrize("n", [3, 10, 100, 1000])
    def test_near_boundary_rank_two_is_exact(self, n):
        # CP coefficients grow like n^2 here, which stalls plain ALS
        A = dsl_sequence(*UNIT).term(n).to_float()
        model, trace = weak_rank2(A, seed=0, restarts=1)
        assert trace.final_residual <= 1e-10 * A.norm()

    def test_dominates_als_on_g3(self):
        A, _ = random_orbit_sample(OrbitClass.G3, 4)
        model, trace = weak_rank2(A, seed=0, restarts=4)
        best = min(als_cp(A, 2, seed=100 + i)[1].final_residual for i in range(4))
        assert trace.final_residual <= best + 1e-8 * A.to_float().norm()
        approx = model.evaluate()
        assert classify222(approx).cls is OrbitClass.D3
        assert abs(delta_extended(approx)) <= 1e-8 * approx.norm() ** 4

    def test_residual_matches_model(self, rng):
        A = tensor(rng.standard_normal((2, 3, 2)))
        model, trace = weak_rank2(A, seed=3, restarts=2, max_iter=2000)
        assert trace.final_residual == pytest.approx(_residual(A, model), rel=1e-12, abs=1e-14)
        assert delta_extended(model.evaluate()) >= -1e-9

    def test_invalid(self):
        with pytest.raises(DimensionError):
            weak_rank2(np.ones((2, 2)))
        with pytest.raises(DimensionError):
            weak_rank2(np.ones((1, 2, 2)))


class TestDegeneracy:
    def test_g3_diverges(self):
        G3 = OrbitClass.G3.canonical()
        _, trace = als_cp(G3, 2, seed=0, max_iter=2000)
        rep = degeneracy_report(trace, G3.to_float().norm())
        assert rep.degenerate and rep.diverging_terms == 2 and rep.bounded
        assert rep.max_lambda > rep.threshold
        js = rep.to_json()
        assert js["k_factor_degeneracy"] == 2

    def test_g2_is_not_degenerate(self):
        G2 = OrbitClass.G2.canonical()
        _, trace = als_cp(G2, 2, seed=0)
        rep = degeneracy_report(trace, G2.to_float().norm())
        assert not rep.degenerate and rep.diverging_terms == 0

    def test_empty_trace(self):
        with pytest.raises(ValueError):
            degeneracy_report(FitTrace(), 1.0)


class TestBregman:
    @given(float_arrays((2, 2, 2)), float_arrays((2, 2, 2)))
    def test_half_squared_norm(self, a, b):
        d = bregman(a, b)
        assert d == pytest.approx(0.5 * np.sum((a - b) ** 2), rel=1e-9, abs=1e-9)
        assert bregman(a, a) == pytest.approx(0.0, abs=1e-9)

    def test_entropy(self, rng):
        a = rng.uniform(0.1, 2.0, (2, 2, 2))
        b = rng.uniform(0.1, 2.0, (2, 2, 2))
        expected = np.sum(a * np.log(a / b) - a + b)
        assert bregman(a, b, NEG_ENTROPY) == pytest.approx(expected, rel=1e-12)
        assert bregman(a, b, NEG_ENTROPY) >= 0

    def test_errors(self):
        with pytest.raises(DimensionError):
            bregman(np.ones((2, 2)), np.ones((2, 3)))
        with pytest.raises(ValueError):
            bregman(np.ones((2, 2)), -np.ones((2, 2)), NEG_ENTROPY)

    def test_boundary_sequence(self):
        h = dsl_sequence(*UNIT)
        An, A = h.term(1000), h.limit
        assert bregman(A, An) <= 1e-4 and bregman(An, A) <= 1e-4

    def test_registry(self):
        assert GENERATORS[HALF_SQUARED_NORM.name] is HALF_SQUARED_NORM


class TestTraceCsv:
    def test_header(self, rng):
        _, trace = als_cp(tensor(rng.standard_normal((2, 2, 2))), 2, seed=0, max_iter=5)
        first = trace.to_csv().splitlines()[0]
        assert first == "iter,residual,lambda_1,lambda_2,cos_mode1,cos_mode2,cos_mode3,elapsed_ms"

    def test_rows(self, rng):
        _, trace = als_cp(tensor(rng.standard_normal((2, 2, 2))), 2, seed=0, max_iter=5)
        buf = io.StringIO()
        trace.write_csv(buf)
        rows = buf.getvalue().splitlines()
        assert len(rows) == len(trace) + 1
        assert float(rows[-1].split(",")[1]) == trace.final_residual
