import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from contracert import io
from contracert.cli import EXIT_DOMAIN, EXIT_OK, EXIT_VIOLATION, RunConfig, UsageError, main, parse_config
from contracert.contraction_engine import certify_fnn, certify_hnn
from contracert.errors import NotSymmetric, ParseError
from contracert.network_dynamics import NetworkModel, integrate
from contracert.qp_box_solver import QpProblem, oracle_solve


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


class TestParseMatrix:
    def test_exchange(self, tmp_path):
        W = io.parse_matrix_json(write_json(tmp_path / "w.json", {"n": 2, "data": [0, 1, 1, 0]}))
        assert_array_equal(W, [[0, 1], [1, 0]])

    def test_near_symmetric_accepted(self, tmp_path):
        W = io.parse_matrix_json(write_json(tmp_path / "w.json", {"n": 2, "data": [0, 1, 0.999999999, 0]}))
        assert W[0, 1] == W[1, 0] == pytest.approx(0.9999999995)

    def test_asymmetric_rejected(self, tmp_path):
        with pytest.raises(NotSymmetric):
            io.parse_matrix_json(write_json(tmp_path / "w.json", {"n": 2, "data": [0, 1, 0.5, 0]}))

    @pytest.mark.parametrize(
        "payload, fragment",
        [
            ({"data": [1]}, "'n'"),
            ({"n": 2, "data": [1, 2, 3]}, "'data'"),
            ({"n": 1, "data": ["x"]}, "non-numeric"),
            ({"n": 0, "data": []}, "'n'"),
            ([1, 2], "object"),
        ],
    )
    def test_field_context(self, tmp_path, payload, fragment):
        with pytest.raises(ParseError, match=fragment):
            io.parse_matrix_json(write_json(tmp_path / "w.json", payload))

    def test_non_finite(self, tmp_path):
        p = tmp_path / "w.json"
        p.write_text('{"n": 1, "data": [NaN]}')
        with pytest.raises(ParseError, match="non-finite"):
            io.parse_matrix_json(p)

    def test_line_context(self, tmp_path):
        p = tmp_path / "w.json"
        p.write_text('{"n": 2,\n "data": [1, 2,, 3]}')
        with pytest.raises(ParseError, match="line 2"):
            io.parse_matrix_json(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            io.parse_matrix_json(tmp_path / "nope.json")


class TestSerialization:
    def test_seventeen_digits(self):
        assert io.fmt_real(0.1) == "0.10000000000000001"
        assert io.fmt_real(1.0) == "1"
        with pytest.raises(ValueError):
            io.fmt_real(float("inf"))

    def test_dumps_is_json(self):
        obj = {"a": [1.5, 2], "b": {"c": None, "d": True}, "e": "s", "f": [], "g": [[1.0, 2.0]]}
        assert json.loads(io.dumps(obj)) == obj

    @settings(max_examples=200)
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_round_trip(self, x):
        assert float(io.fmt_real(x)) == x

    @pytest.mark.parametrize("certify, W", [(certify_fnn, np.diag([0.5, -1.0])), (certify_hnn, np.diag([0.5, 0.0]))])
    def test_certificate_round_trip(self, certify, W):
        cert = certify(W)
        data = json.loads(io.dumps(io.certificate_to_dict(cert)))
        assert set(data) == {"model", "case", "rate", "alpha_W", "epsilon", "weight", "verification"}
        assert set(data["verification"]) == {"max_vertex_lognorm", "vertices_checked", "verdict"}
        assert_array_equal(io.weight_from_certificate(data), cert.weight.Q)
        assert data["rate"] == cert.rate

    def test_trajectory_csv(self, tmp_path, rng):
        m = NetworkModel("FNN", np.diag([0.5, -1.0]), rng.standard_normal(2))
        tr = integrate(m, rng.standard_normal(2), 0.1, 1.0)
        io.write_trajectory_csv(tr, tmp_path / "t.csv")
        assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t,x1,x2"
        t, X = io.read_trajectory_csv(tmp_path / "t.csv")
        assert_array_equal(t, tr.times)
        assert_array_equal(X, tr.states)

    def test_qp_parse(self, tmp_path):
        path = write_json(tmp_path / "p.json", {"n": 1, "A": [2], "u": [5], "mu": [0], "nu": [1]})
        p = io.parse_qp_json(path)
        assert p.n == 1 and p.u[0] == 5.0
        with pytest.raises(ParseError, match="'nu'"):
            io.parse_qp_json(write_json(tmp_path / "q.json", {"n": 1, "A": [2], "u": [5], "mu": [0]}))


class TestConfig:
    def test_parse(self):
        cfg = parse_config(["certify", "--model", "fnn", "--output", "o.json", "w.json"])
        assert cfg.command == "certify" and cfg.output_path == "o.json" and cfg.input_path == "w.json"

    def test_requirements(self):
        with pytest.raises(UsageError):
            RunConfig("certify", input_path="w.json")
        with pytest.raises(UsageError):
            RunConfig("solve-qp")
        with pytest.raises(UsageError):
            RunConfig("verify-polytope", input_path="w.json", side="up")
        RunConfig("selftest")

    def test_usage_errors_exit_one(self, capsys):
        assert main(["certify", "w.json"]) == EXIT_DOMAIN
        assert main(["frobnicate"]) == EXIT_DOMAIN
        assert "usage error" in capsys.readouterr().err


class TestCommands:
    def test_certify(self, tmp_path):
        w = write_json(tmp_path / "W.json", {"n": 2, "data": [0.5, 0, 0, -1]})
        out = tmp_path / "c.json"
        assert main(["certify", "--model", "fnn", "--output", str(out), w]) == EXIT_OK
        data = json.loads(out.read_text())
        assert data["rate"] == 0.5 and data["case"] == "AlphaIn01"
        assert data["verification"]["verdict"] == "Contracting"

    def test_certify_is_deterministic(self, tmp_path, capsys):
        w = write_json(tmp_path / "W.json", {"n": 3, "data": [0.2, 0.3, 0, 0.3, -1, 0.1, 0, 0.1, 0.4]})
        main(["certify", "--model", "hnn", w])
        first = capsys.readouterr().out
        main(["certify", "--model", "hnn", w])
        assert capsys.readouterr().out == first

    def test_verify_polytope(self, tmp_path, capsys):
        w = write_json(tmp_path / "W.json", {"n": 2, "data": [0.5, 0, 0, -1]})
        assert main(["verify-polytope", "--side", "left", "--exhaustive", w]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["verdict"] == "LogOptimal"

    def test_violation_exit_code(self, tmp_path, capsys):
        w = write_json(tmp_path / "N.json", {"n": 2, "data": [-2, 0.5, 0.5, -1]})
        assert main(["verify-polytope", "--side", "right", w]) == EXIT_OK
        capsys.readouterr()
        assert main(["verify-polytope", "--side", "right", "--sqrt-weight", w]) == EXIT_VIOLATION
        assert json.loads(capsys.readouterr().out)["verdict"] == "Violated"

    def test_domain_errors(self, tmp_path, capsys):
        bad = write_json(tmp_path / "B.json", {"n": 2, "data": [0, 1, 0.5, 0]})
        assert main(["certify", "--model", "fnn", bad]) == EXIT_DOMAIN
        big = write_json(tmp_path / "E.json", {"n": 1, "data": [2.0]})
        assert main(["certify", "--model", "fnn", big]) == EXIT_DOMAIN
        err = capsys.readouterr().err
        assert "NotSymmetric" in err and "DegenerateRate" in err

    def test_simulate(self, tmp_path):
        w = write_json(tmp_path / "W.json", {"n": 2, "data": [0.5, 0, 0, -1], "u": [1, 0]})
        out = tmp_path / "t.csv"
        args = ["simulate", "--model", "hnn", "--activation", "relu", "--step", "0.05", "--horizon", "1", "--seed", "4"]
        assert main(args + ["--output", str(out), w]) == EXIT_OK
        t, X = io.read_trajectory_csv(out)
        assert t.shape == (21,) and X.shape == (21, 2)
        first = out.read_text()
        main(args + ["--output", str(out), w])
        assert out.read_text() == first

    def test_solve_qp(self, tmp_path, capsys):
        spec = {"n": 2, "A": [2, 0.5, 0.5, 1], "u": [1, 1], "mu": [0, 0], "nu": [0.4, 0.4]}
        path = write_json(tmp_path / "p1.json", spec)
        assert main(["solve-qp", path, "--tol", "1e-8"]) == EXIT_OK
        x = np.array(json.loads(capsys.readouterr().out)["x"])
        ref = oracle_solve(QpProblem(np.array(spec["A"]).reshape(2, 2), spec["u"], spec["mu"], spec["nu"])).x_star
        assert np.max(np.abs(x - ref)) <= 1e-6

    def test_selftest(self, capsys):
        assert main(["selftest", "--seed", "3"]) == EXIT_OK
        assert "0 failed" in capsys.readouterr().out

    def test_module_entry_point(self, tmp_path):
        w = write_json(tmp_path / "W.json", {"n": 1, "data": [-1]})
        r = subprocess.run([sys.executable, "-m", "contracert", "certify", "--model", "fnn", w], capture_output=True, text=True)
        assert r.returncode == 0
        assert json.loads(r.stdout)["case"] == "AlphaNeg"
