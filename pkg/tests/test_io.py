import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given

from borderrank import io
from borderrank.tensor_core import tensor

from conftest import float_arrays, int_arrays


class TestRoundTrip:
    @given(int_arrays((2, 3, 2)))
    def test_rational(self, X):
        A = tensor(X).to_exact() * Fraction(1, 3)
        B = io.loads_tensor(io.dumps_tensor(A))
        assert B.is_exact and B.shape == A.shape and np.all(B.array == A.array)

    @given(float_arrays((3, 2)))
    def test_float(self, X):
        A = tensor(X)
        B = io.loads_tensor(io.dumps_tensor(A))
        assert not B.is_exact and np.array_equal(B.array, A.array)

    def test_file(self, tmp_path):
        A = tensor(np.arange(8).reshape(2, 2, 2)).to_exact()
        path = tmp_path / "t.json"
        io.write_tensor(A, path)
        assert np.all(io.read_tensor(path).array == A.array)

    def test_rational_text(self):
        obj = io.tensor_to_json(tensor(np.array([Fraction(1, 2), Fraction(3)], dtype=object)))
        assert obj == {"shape": [2], "scalar": "rational", "data": ["1/2", "3"]}

    def test_integer_rationals_accepted(self):
        A = io.tensor_from_json({"shape": [2], "scalar": "rational", "data": [1, "-2/4"]})
        assert A.array.tolist() == [Fraction(1), Fraction(-1, 2)]


class TestRejects:
    @pytest.mark.parametrize("obj", [
        [],
        {"shape": [2], "scalar": "f64"},
        {"shape": [2, 2], "scalar": "f64", "data": [1.0, 2.0, 3.0]},
        {"shape": [0], "scalar": "f64", "data": []},
        {"shape": [2], "scalar": "complex", "data": [1, 2]},
        {"shape": [1], "scalar": "rational", "data": ["1/0"]},
        {"shape": [1], "scalar": "rational", "data": [0.5]},
        {"shape": [1], "scalar": "f64", "data": ["1"]},
        {"shape": [1], "scalar": "f64", "data": [True]},
        {"shape": [2], "scalar": "f64", "data": [[1.0], [2.0]]},
    ])
    def test_bad_objects(self, obj):
        with pytest.raises(io.TensorFormatError):
            io.tensor_from_json(obj)

    def test_non_finite(self):
        with pytest.raises(io.TensorFormatError):
            io.loads_tensor('{"shape": [1], "scalar": "f64", "data": [NaN]}')

    def test_bad_json(self):
        with pytest.raises(io.TensorFormatError):
            io.loads_tensor("{not json")


class TestSidecar:
    def test_path(self, tmp_path):
        assert io.sidecar_path(tmp_path / "x.json").name == "x.witness.json"
        assert io.sidecar_path(tmp_path / "x").name == "x.witness.json"

    def test_terms(self, tmp_path):
        terms = [(1, [np.array([1, 0]), np.array([0, 1])]), (Fraction(1, 2), [np.array([1, 1]), np.array([2, 0])])]
        out = io.write_sidecar(tmp_path / "a.json", {"witness": io.terms_to_json(terms)})
        payload = json.loads(out.read_text())
        assert payload["witness"][0] == {"coef": "1", "vectors": [["1", "0"], ["0", "1"]]}
        assert payload["witness"][1]["coef"] == "1/2"
