import json
import math
import subprocess
import sys

import numpy as np
import pytest

from designreg import BernoulliCauses, BernoulliSampling, FinitePopulation, IndependentAssignment, LinearPotentialOutcomes
from designreg.cli import main
from designreg.io import DataError, dumps, parse_csv, population_from_dict, population_to_dict

EXAMPLE_SPEC = {
    "n": 4,
    "outcomes": {"kind": "binary", "y1": [1, 2, 3, 4], "y0": [0, 0, 0, 2]},
    "attributes": None,
    "causes": None,
    "sampling": {"kind": "srs", "size": 2},
    "assignment": {"kind": "complete", "n_treated": 2},
}


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def example_csv(tmp_path):
    return write(tmp_path, "ex.csv", "Y,X\n1,1\n2,1\n0,0\n2,0\n")


class TestJson:
    def test_floats_round_trip(self):
        vals = [0.1, 1 / 3, 2.5, -0.0, 1e-300, 123456789.123]
        assert json.loads(dumps(vals)) == vals

    def test_non_finite_and_numpy(self):
        text = dumps({"a": np.float64(math.nan), "b": np.arange(2), "c": np.array([1.5]), "d": True})
        assert json.loads(text) == {"a": None, "b": [0, 1], "c": [1.5], "d": True}

    def test_rejects_objects(self):
        with pytest.raises(TypeError):
            dumps({"a": object()})


class TestPopulationSpec:
    def test_round_trip_binary(self):
        pop = population_from_dict(EXAMPLE_SPEC)
        again = population_from_dict(population_to_dict(pop))
        assert population_to_dict(again) == population_to_dict(pop)

    def test_round_trip_linear_discrete(self):
        spec = {
            "n": 3,
            "outcomes": {"kind": "linear", "theta": [[1, 0], [0, 1], [1, 1]], "xi": [0, 1, 2]},
            "attributes": [[1, -1], [1, 0], [1, 1]],
            "causes": {"kind": "discrete", "support": [[[0, 0], [1, 0]], [[0, 1]], [[1, 1], [0, 0]]], "probs": [[0.5, 0.5], [1], [0.2, 0.8]]},
            "sampling": {"kind": "bernoulli", "rate": 0.5},
            "assignment": {"kind": "independent"},
        }
        pop = population_from_dict(spec)
        assert population_to_dict(pop) == json.loads(json.dumps(population_to_dict(population_from_dict(population_to_dict(pop)))))

    @pytest.mark.parametrize(
        "patch, match",
        [
            ({"extra": 1}, "unknown key"),
            ({"outcomes": {"kind": "binary", "y1": [1, 2, 3, 4], "y0": [0, 0, 0]}}, "length mismatch"),
            ({"attributes": [[0], [1], [2], [3]]}, "missing intercept"),
            ({"assignment": {"kind": "complete", "n_treated": 4}}, "treated count"),
            ({"causes": {"kind": "bernoulli", "p": [0.5] * 4}}, "null under complete"),
            ({"sampling": {"kind": "cluster"}}, "unknown kind"),
            ({"outcomes": {"kind": "binary", "y1": [1, 2, 3, 4], "y0": [0, 0, 0, 2], "z": 1}}, "unknown key"),
        ],
    )
    def test_rejects(self, patch, match):
        spec = {**EXAMPLE_SPEC, **patch}
        with pytest.raises(DataError, match=match):
            population_from_dict(spec)


class TestCsv:
    def test_auto_intercept(self, example_csv):
        data = parse_csv(example_csv, "Y", ["X"])
        assert (data.N, data.k, data.q) == (4, 1, 1)
        assert data.attribute_names == ("(intercept)",)

    def test_existing_ones_column_moves_first(self, tmp_path):
        p = write(tmp_path, "d.csv", "Y,X,W,one\n1,1,3,1\n2,1,1,1\n0,0,2,1\n2,0,5,1\n3,1,0,1\n")
        data = parse_csv(p, "Y", ["X"], ["W", "one"])
        assert data.attribute_names == ("one", "W")
        np.testing.assert_array_equal(data.z[:, 0], 1.0)

    def test_missing_column(self, example_csv):
        with pytest.raises(DataError, match="'Q'"):
            parse_csv(example_csv, "Y", ["Q"])

    def test_non_numeric(self, tmp_path):
        p = write(tmp_path, "d.csv", "Y,X\n1,1\nabc,1\n0,0\n2,0\n")
        with pytest.raises(DataError, match="row 3"):
            parse_csv(p, "Y", ["X"])

    def test_too_few_rows(self, tmp_path):
        p = write(tmp_path, "d.csv", "Y,X\n1,1\n2,0\n")
        with pytest.raises(DataError, match="k\\+q\\+1"):
            parse_csv(p, "Y", ["X"])

    def test_rank_deficient_attributes_parse(self, tmp_path):
        p = write(tmp_path, "d.csv", "Y,X,A,B\n1,1,1,2\n2,1,2,4\n0,0,3,6\n2,0,4,8\n5,1,5,10\n")
        data = parse_csv(p, "Y", ["X"], ["A", "B"])
        assert data.q == 3


class TestEstimate:
    def test_worked_example(self, example_csv, capsys):
        code, out, _ = run(["estimate", "--data", example_csv, "--outcome", "Y", "--causes", "X"], capsys)
        assert code == 0
        rep = json.loads(out)
        coef = rep["coefficients"][0]
        assert coef["estimate"] == pytest.approx(0.5, abs=1e-12)
        # uncorrected general formula gives the plain robust variance
        assert coef["se_ehw"] ** 2 == pytest.approx(0.625, abs=1e-12)
        assert rep["binary"]["v_ehw_hat"] == pytest.approx(0.625, abs=1e-12)
        assert rep["binary"]["v_ehw_tilde"] == pytest.approx(1.25, abs=1e-12)
        assert coef["se_causal"] == coef["se_descriptive"] == coef["se_ehw"]

    def test_census(self, example_csv, capsys):
        argv = ["estimate", "--data", example_csv, "--outcome", "Y", "--causes", "X", "--population-size", 4]
        code, out, _ = run(argv, capsys)
        rep = json.loads(out)
        assert rep["rho_hat"] == 1.0
        assert rep["coefficients"][0]["se_descriptive"] == 0.0

    def test_estimand_filter(self, example_csv, capsys):
        argv = ["estimate", "--data", example_csv, "--outcome", "Y", "--causes", "X", "--estimand", "causal-sample"]
        rep = json.loads(run(argv, capsys)[1])
        assert set(rep["coefficients"][0]) == {"name", "estimate", "se_ehw", "se_causal_sample"}

    def test_singular_exit_code(self, tmp_path, capsys):
        p = write(tmp_path, "d.csv", "Y,X,A,B\n1,1,1,2\n2,1,2,4\n0,0,3,6\n2,0,4,8\n5,1,5,10\n")
        code, out, err = run(["estimate", "--data", p, "--outcome", "Y", "--causes", "X", "--attributes", "A,B"], capsys)
        assert code == 3 and out == ""
        payload = json.loads(err)
        assert payload["error"] == "singular_design" and payload["exit_code"] == 3

    def test_data_error_exit_code(self, example_csv, capsys):
        code, _, err = run(["estimate", "--data", example_csv, "--outcome", "Y", "--causes", "Nope"], capsys)
        assert code == 2 and "Nope" in json.loads(err)["message"]

    def test_unknown_flag(self, example_csv, capsys):
        code, _, err = run(["estimate", "--data", example_csv, "--outcome", "Y", "--causes", "X", "--bogus"], capsys)
        assert code == 2 and json.loads(err)["exit_code"] == 2

    def test_no_partial_output_on_error(self, tmp_path, capsys):
        bad = write(tmp_path, "bad.csv", "Y,X\n1,1\n")
        out = tmp_path / "report.json"
        code, _, _ = run(["estimate", "--data", bad, "--outcome", "Y", "--causes", "X", "--out", out], capsys)
        assert code == 2 and not out.exists()
        assert list(tmp_path.iterdir()) == [bad]

    def test_out_file(self, example_csv, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, stdout, _ = run(["estimate", "--data", example_csv, "--outcome", "Y", "--causes", "X", "--out", out], capsys)
        assert code == 0 and stdout == ""
        assert json.loads(out.read_text())["N"] == 4


class TestSimulateEnumerate:
    def test_enumerate_example(self, tmp_path, capsys):
        spec = write(tmp_path, "pop.json", json.dumps(EXAMPLE_SPEC))
        code, out, _ = run(["enumerate", "--data", spec], capsys)
        rep = json.loads(out)
        cell = next(c for c in rep["cells"] if c["N1"] == 1)
        assert code == 0 and cell["var_theta_hat"] == pytest.approx(2.5, rel=1e-10)

    def test_enumerate_budget(self, tmp_path, capsys):
        spec = {**EXAMPLE_SPEC, "n": 30, "outcomes": {"kind": "binary", "y1": list(range(30)), "y0": [0] * 30},
                "sampling": {"kind": "srs", "size": 15}, "assignment": {"kind": "complete", "n_treated": 15}}
        code, _, err = run(["enumerate", "--data", write(tmp_path, "big.json", json.dumps(spec))], capsys)
        assert code == 2 and json.loads(err)["error"] == "EnumerationBudgetError"

    def test_simulate_single_rep_and_repeatable(self, tmp_path, capsys):
        spec = write(tmp_path, "pop.json", json.dumps({**EXAMPLE_SPEC, "n": 8,
            "outcomes": {"kind": "binary", "y1": [1, 2, 3, 4, 5, 6, 7, 8], "y0": [0, 1, 0, 1, 0, 1, 0, 3]},
            "sampling": {"kind": "srs", "size": 8}, "assignment": {"kind": "complete", "n_treated": 4}}))
        code, out, _ = run(["simulate", "--data", spec, "--reps", 1, "--seed", 4], capsys)
        rep = json.loads(out)
        assert code == 0 and len(rep["replications"]) == 1
        again = run(["simulate", "--data", spec, "--reps", 1, "--seed", 4], capsys)[1]
        assert out == again

    def test_simulate_estimand_filter(self, tmp_path, capsys):
        spec = write(tmp_path, "pop.json", json.dumps({**EXAMPLE_SPEC, "n": 8,
            "outcomes": {"kind": "binary", "y1": [1, 2, 3, 4, 5, 6, 7, 8], "y0": [0, 1, 0, 1, 0, 1, 0, 3]},
            "sampling": {"kind": "srs", "size": 8}, "assignment": {"kind": "complete", "n_treated": 4}}))
        rep = json.loads(run(["simulate", "--data", spec, "--reps", 20, "--estimand", "causal"], capsys)[1])
        assert set(rep["coverage"]["ehw"]) == {"causal"}

    def test_all_degenerate(self, tmp_path, capsys):
        spec = write(tmp_path, "pop.json", json.dumps({**EXAMPLE_SPEC, "assignment": {"kind": "complete", "n_treated": 1}}))
        code, _, err = run(["simulate", "--data", spec, "--reps", 5], capsys)
        assert code == 2 and json.loads(err)["error"] == "AllDrawsDegenerateError"

    def test_missing_spec(self, tmp_path, capsys):
        code, _, _ = run(["simulate", "--data", tmp_path / "nope.json"], capsys)
        assert code == 2


class TestBayesCommand:
    def test_posteriors(self, tmp_path, capsys):
        p = write(tmp_path, "b.csv", "Y,X\n3,1\n4,1\n2,1\n3,1\n1,0\n0,0\n2,0\n1,0\n")
        argv = ["bayes", "--data", p, "--outcome", "Y", "--causes", "X", "--population-size", 16,
                "--n1", 8, "--n0", 8, "--sigma1", 1, "--sigma0", 1, "--kappa", 1]
        code, out, _ = run(argv, capsys)
        rep = json.loads(out)["posteriors"]
        assert code == 0
        assert rep["super-causal"] == {"mean": 2.0, "variance": 0.5}
        assert rep["descriptive-n"]["variance"] == pytest.approx(0.25)
        assert rep["causal-n"]["variance"] == pytest.approx(0.5, abs=1e-12)

    def test_rejects_non_binary(self, tmp_path, capsys):
        p = write(tmp_path, "b.csv", "Y,X\n3,1\n4,2\n2,1\n3,0\n")
        argv = ["bayes", "--data", p, "--outcome", "Y", "--causes", "X", "--population-size", 16,
                "--n1", 8, "--n0", 8, "--sigma1", 1, "--sigma0", 1, "--kappa", 0]
        assert run(argv, capsys)[0] == 2


def test_module_entry_point(example_csv):
    proc = subprocess.run(
        [sys.executable, "-m", "designreg", "estimate", "--data", str(example_csv), "--outcome", "Y", "--causes", "X"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["coefficients"][0]["estimate"] == pytest.approx(0.5)
