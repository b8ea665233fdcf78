import json
import subprocess
import sys

import numpy as np
import pytest

from borderrank import io
from borderrank.cli import main, table1_markdown
from borderrank.rank222 import OrbitClass, table1
from borderrank.tensor_core import tensor


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


@pytest.fixture
def g3_file(tmp_path):
    path = tmp_path / "g3.json"
    io.write_tensor(OrbitClass.G3.canonical(), path)
    return path


class TestClassify:
    @pytest.mark.parametrize("cls", list(OrbitClass))
    def test_generate_then_classify(self, capsys, tmp_path, cls):
        path = tmp_path / "t.json"
        assert run(capsys, "generate", f"canonical:{cls.label}", "--out", path)[0] == 0
        code, rep = run_json(capsys, "classify", path)
        assert code == 0 and rep["class"] == cls.label
        side = json.loads(io.sidecar_path(path).read_text())
        assert side["labels"]["class"] == cls.label

    @pytest.mark.parametrize("cls", list(OrbitClass))
    def test_random_orbit(self, capsys, tmp_path, cls):
        path = tmp_path / "t.json"
        run(capsys, "generate", "random-orbit", "--class", cls.label, "--seed", 5, "--out", path)
        code, rep = run_json(capsys, "classify", path)
        assert code == 0 and rep["class"] == cls.label

    def test_float_input_and_exact_flag(self, capsys, tmp_path):
        path = tmp_path / "t.json"
        run(capsys, "generate", "dsl", "--float", "--out", path)
        assert json.loads(path.read_text())["scalar"] == "f64"
        assert run_json(capsys, "classify", path)[1]["class"] == "D3"
        code, rep = run_json(capsys, "classify", path, "--exact")
        assert code == 0 and rep["delta"] == "0"

    def test_unclassified(self, capsys, tmp_path):
        path = tmp_path / "r.json"
        io.write_tensor(tensor(np.random.default_rng(0).standard_normal((3, 3, 3))), path)
        code, rep = run_json(capsys, "classify", path)
        assert code == 2 and rep["class"] is None

    def test_bigger_format(self, capsys, tmp_path):
        path = tmp_path / "g.json"
        run(capsys, "generate", "rank-plus-one", "--shape", "3,3,3", "--r", 3, "--out", path)
        code, rep = run_json(capsys, "classify", path)
        assert code == 2 and rep["mlrank"] == [3, 3, 3]
        padded = np.zeros((3, 3, 3))
        padded[0, 0, 1] = padded[0, 1, 0] = padded[1, 0, 0] = 1.0
        io.write_tensor(tensor(padded), path)
        code, rep = run_json(capsys, "classify", path)
        assert code == 0 and rep["class"] == "D3"

    def test_input_errors(self, capsys, tmp_path):
        assert run(capsys, "classify", tmp_path / "missing.json")[0] == 1
        bad = tmp_path / "bad.json"
        bad.write_text('{"shape": [2, 2, 2], "scalar": "f64", "data": [1, 2]}')
        code, _, err = run(capsys, "classify", bad)
        assert code == 1 and "entries" in err
        mat = tmp_path / "m.json"
        io.write_tensor(tensor(np.eye(2)), mat)
        assert run(capsys, "classify", mat)[0] == 1

    def test_bad_flag_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["classify", "--no-such-flag"])
        assert exc.value.code == 1
        capsys.readouterr()


class TestGenerate:
    def test_leibniz_limit(self, capsys):
        code, out, _ = run(capsys, "generate", "leibniz", "--k", 3, "--a", "1,1")
        A = io.loads_tensor(out)
        assert code == 0 and A.shape == (3, 3, 3) and sum(A.data) == 6

    def test_sequence_term_has_witness(self, capsys, tmp_path):
        path = tmp_path / "s.json"
        run(capsys, "generate", "dsl-seq", "--n", 4, "--out", path)
        side = json.loads(io.sidecar_path(path).read_text())
        assert side["n"] == 4 and len(side["witness"]) == 2 and "error_bound" in side
        assert run_json(capsys, "classify", path)[1]["class"] == "G2"

    def test_gap(self, capsys, tmp_path):
        path = tmp_path / "g.json"
        run(capsys, "generate", "gap", "--r", 5, "--s", 2, "--n", 3, "--out", path)
        side = json.loads(io.sidecar_path(path).read_text())
        assert io.read_tensor(path).shape == (5, 5, 5) and len(side["witness"]) == 5

    @pytest.mark.parametrize("argv", [
        ["generate", "dsl-seq"],
        ["generate", "dsl-seq", "--n", "0"],
        ["generate", "leibniz", "--k", "3"],
        ["generate", "leibniz", "--k", "3", "--a", "x"],
        ["generate", "gap", "--r", "3", "--s", "2"],
        ["generate", "canonical:Z9"],
        ["generate", "nonsense"],
        ["generate", "random-orbit"],
    ])
    def test_errors(self, capsys, argv):
        assert run(capsys, *argv)[0] == 1

    def test_rational_output_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            run(capsys, "generate", "random-orbit", "--class", "G3", "--seed", 9, "--out", p)
        assert a.read_bytes() == b.read_bytes()
        assert io.sidecar_path(a).read_bytes() == io.sidecar_path(b).read_bytes()


class TestFitting:
    def test_fit(self, capsys, g3_file, tmp_path):
        trace = tmp_path / "trace.csv"
        code, out = run_json(capsys, "fit", g3_file, "--rank", 2, "--max-iter", 2000, "--trace", trace)
        assert code == 0 and out["iterations"] == 2000
        assert out["degeneracy"]["degenerate"]
        lines = trace.read_text().splitlines()
        assert lines[0].startswith("iter,residual,lambda_1,lambda_2") and len(lines) == 2001

    def test_trace_identical_without_clock(self, capsys, g3_file, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            run(capsys, "fit", g3_file, "--rank", 2, "--max-iter", 300, "--trace", p, "--no-clock")
        assert a.read_bytes() == b.read_bytes()

    def test_fit_errors(self, capsys, g3_file):
        assert run(capsys, "fit", g3_file, "--rank", 0)[0] == 1

    def test_weak2(self, capsys, g3_file):
        code, out = run_json(capsys, "weak2", g3_file, "--restarts", 2)
        assert code == 0 and out["classification"]["class"] == "D3"
        assert out["model"]["family"] == "three-term-boundary"

    def test_degeneracy_demo(self, capsys):
        code, out = run_json(capsys, "degeneracy-demo", "--max-iter", 1000)
        assert code == 0 and out["iterations"] == 1000
        assert out["checkpoints"][-1]["iter"] == 1000 and out["report"]["degenerate"]


class TestBregmanAndTable:
    def test_dsl_demo(self, capsys):
        code, out = run_json(capsys, "bregman", "--dsl-n", 1000)
        assert code == 0 and out["D(A,A_n)"] <= 1e-4 and out["D(A_n,A)"] <= 1e-4

    def test_files(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        io.write_tensor(tensor(np.array([1.0, 2.0])), a)
        io.write_tensor(tensor(np.array([0.0, 0.0])), b)
        code, out = run_json(capsys, "bregman", a, b)
        assert code == 0 and out["divergence"] == pytest.approx(2.5)
        assert run(capsys, "bregman", a, b, "--phi", "negative-entropy")[0] == 1
        assert run(capsys, "bregman", a, b, "--phi", "nope")[0] == 1
        assert run(capsys, "bregman", a)[0] == 1

    def test_table(self, capsys):
        code, out, _ = run(capsys, "reproduce-table1")
        lines = out.strip().splitlines()
        assert code == 0 and len(lines) == 2 + 8
        assert lines[0] == "| class | sign(delta) | multilinear rank | rank | border rank |"
        assert out.strip() == table1_markdown(table1())
        assert "| G3 | - | (2,2,2) | 3 | 3 |" in lines and "| D3 | 0 | (2,2,2) | 3 | 2 |" in lines


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "borderrank", "reproduce-table1"],
                         capture_output=True, text=True, check=True)
    assert "| D0 |" in out.stdout
