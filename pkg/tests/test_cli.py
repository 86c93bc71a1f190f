import json

import numpy as np
import pytest

from recipkit.cli import _emit_json, main, write_report

LINEAR_DOC = {
    "kind": "linear",
    "A": [[-1.0, -2.0], [2.0, -1.0]],
    "B": [[1.0], [0.0]],
    "C": [[1.0, 0.0]],
    "D": [[0.0]],
    "G": [[1.0, 0.0], [0.0, -1.0]],
    "Q0": [[1.0, 0.0], [0.0, 2.0]],
}


def read_report(out_dir):
    with open(out_dir / "report.json") as fh:
        return json.load(fh)


def test_emit_json_formatting():
    assert _emit_json({"b": 1, "a": [True, 2.5]}) == '{"a":[true,2.5],"b":1}'
    assert _emit_json(0.1) == "0.10000000000000001"
    assert _emit_json(float("nan")) == "null"
    assert _emit_json(float("inf")) == "null"
    assert _emit_json(np.array([1.0, 2.0])) == "[1,2]"
    with pytest.raises(TypeError):
        _emit_json(object())


def test_write_report_round_trip(tmp_path):
    path = write_report(str(tmp_path), {"x": 1.5, "nested": {"ok": True}})
    with open(path) as fh:
        assert json.load(fh) == {"x": 1.5, "nested": {"ok": True}}
    leftovers = [p for p in tmp_path.iterdir() if p.name.startswith(".report-")]
    assert leftovers == []


def test_list_models(tmp_path, capsys):
    assert main(["list-models", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "brayton-moser" in out and "fields:" in out
    rep = read_report(tmp_path)
    assert {"swing", "gyrator"} <= {row["name"] for row in rep["models"]}
    assert "quadratic" in rep["fields"]


def test_check_reciprocity_linear(tmp_path):
    assert main(["check-reciprocity", "--model", "indefinite-g",
                 "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path)
    assert rep["ok"] and rep["reciprocal"] and rep["impulse_symmetric"]
    assert rep["residual"] < 1e-10


def test_check_reciprocity_nonlinear_kinds(tmp_path):
    assert main(["check-reciprocity", "--model", "brayton-moser",
                 "--samples", "30", "--out", str(tmp_path)]) == 0
    assert read_report(tmp_path)["reciprocal"]
    assert main(["check-reciprocity", "--model", "scalar-relaxation",
                 "--samples", "30", "--out", str(tmp_path)]) == 0
    assert read_report(tmp_path)["points"] > 0


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["legendre", "--field", "quadratic", "--samples", "30",
                     "--out", str(d)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_check_passivity(tmp_path):
    assert main(["check-passivity", "--model", "indefinite-g",
                 "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path)
    assert rep["passive"] and "kernel_invariance" in rep

    doc = dict(LINEAR_DOC)
    doc["A"] = [[1.0, 0.0], [0.0, 1.0]]  # active
    del doc["G"], doc["Q0"]
    path = tmp_path / "active.json"
    path.write_text(json.dumps(doc))
    assert main(["check-passivity", "--input", str(path),
                 "--out", str(tmp_path)]) == 1
    assert read_report(tmp_path)["passive"] is False


def test_compatible_q(tmp_path):
    assert main(["compatible-q", "--model", "indefinite-g",
                 "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path)
    assert np.allclose(rep["Q"], np.eye(2), atol=1e-9)
    assert rep["compatibility_gap"] < 1e-10


def test_recover_g(tmp_path):
    assert main(["recover-g", "--model", "indefinite-g",
                 "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path)
    assert rep["reference_relative_error"] <= 1e-4
    G = np.array(rep["G"])
    assert np.allclose(G, G.T, atol=1e-8)


def test_legendre_cli(tmp_path):
    assert main(["legendre", "--field", "quadratic", "--samples", "40",
                 "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path)
    assert rep["round_trip_gap"] < 1e-8
    assert rep["hessian_inverse_gap"] < 1e-6
    assert rep["homogeneous_degree_two"] and rep["conjugacy_equals_value"]


def test_legendre_field_from_json(tmp_path):
    doc = {"field": {"polynomial": {
        "dim": 1,
        "terms": [{"exponents": [2], "coeff": 1.0}],
        "domain": {"lower": [-2.0], "upper": [2.0]},
    }}}
    path = tmp_path / "field.json"
    path.write_text(json.dumps(doc))
    assert main(["legendre", "--input", str(path), "--samples", "30",
                 "--out", str(tmp_path)]) == 0
    assert read_report(tmp_path)["homogeneous_degree_two"]


def test_christoffel_cli(tmp_path):
    assert main(["christoffel", "--field", "quadratic", "--samples", "5",
                 "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path)
    assert rep["flat"] and rep["cross_oracle_gap"] < 1e-8
    assert main(["christoffel", "--field", "cosh", "--samples", "5",
                 "--out", str(tmp_path)]) == 0
    assert read_report(tmp_path)["flat"] is False


def test_variational_test_cli(tmp_path):
    assert main(["variational-test", "--model", "brayton-moser",
                 "--horizon", "0.5", "--step", "0.01", "--u-const", "0.2",
                 "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path)
    assert rep["match"] and rep["max_output_gap"] < 1e-5
    assert rep["probes"] >= 2


def test_simulate_writes_csv(tmp_path):
    assert main(["simulate", "--model", "rc-relaxation", "--horizon", "2",
                 "--step", "0.01", "--u-const", "0.5",
                 "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path)
    assert rep["steps"] == 200
    assert rep["passive_along"] is True
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0].split(",")[:2] == ["t", "x_1"]
    assert len(lines) == 202  # header + 201 samples
    # capacitor relaxes toward the source value
    assert abs(float(lines[-1].split(",")[1]) - 0.5) < 0.1


def test_simulate_port_hamiltonian(tmp_path):
    assert main(["simulate", "--model", "swing", "--horizon", "1",
                 "--step", "0.01", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trajectory.csv").exists()


def test_certify_relaxation_cli(tmp_path):
    assert main(["certify-relaxation", "--model", "rc-tanh", "--samples", "50",
                 "--horizon", "2", "--step", "0.01", "--u-const", "0.3",
                 "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path)
    assert rep["relaxation"] and rep["mode"] == "-I"
    assert rep["trajectory_passive"] is True


def test_certify_relaxation_rejects_indefinite(tmp_path):
    doc = {
        "kind": "hessian_pseudo_gradient",
        "K": {"polynomial": {"dim": 1,
                             "terms": [{"exponents": [2], "coeff": -0.5}]}},
        "V": {"polynomial": {"dim": 2,
                             "terms": [{"exponents": [2, 0], "coeff": 0.5},
                                       {"exponents": [1, 1], "coeff": -1.0}]}},
        "sigma": [-1],
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["certify-relaxation", "--input", str(path), "--samples", "30",
                 "--out", str(tmp_path)]) == 1
    rep = read_report(tmp_path)
    assert rep["relaxation"] is False and rep["reason"]


def test_convert_ph_cli(tmp_path):
    assert main(["convert-ph", "--model", "swing", "--horizon", "0.3",
                 "--step", "0.001", "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path)
    assert rep["trajectory_match"] and rep["trajectory_gap"] < 1e-4
    assert rep["report"]["I_structure_gap"] < 1e-10


def test_convert_ph_structure_mismatch(tmp_path):
    quad = lambda c: {"polynomial": {"dim": 1,
                                     "terms": [{"exponents": [2], "coeff": c}]}}
    doc = {
        "kind": "port_hamiltonian",
        "H": {"polynomial": {"dim": 2,
                             "terms": [{"exponents": [2, 0], "coeff": 0.5},
                                       {"exponents": [0, 2], "coeff": 0.5}]}},
        "J": [[0.0, -1.0], [1.0, 0.0]],
        "g": [[1.0], [0.0]],
        "split": {
            "idx1": [0], "idx2": [1],
            "H1": quad(0.5), "H2": quad(0.5),
            "P1": quad(0.25), "P2": quad(0.0),
            "Pc": [[2.0]],  # inconsistent with J
            "g1": [[1.0]],
        },
    }
    path = tmp_path / "ph.json"
    path.write_text(json.dumps(doc))
    assert main(["convert-ph", "--input", str(path),
                 "--out", str(tmp_path)]) == 1
    rep = read_report(tmp_path)
    assert rep["failed_assumption"] == "I" and rep["ok"] is False


def test_bad_input_exit_codes(tmp_path, capsys):
    assert main(["check-reciprocity", "--model", "no-such-model"]) == 2
    assert main(["check-reciprocity"]) == 2
    assert main(["legendre", "--field", "no-such-field"]) == 2
    assert main(["check-reciprocity", "--model", "gyrator",
                 "--tol", "reciprocity"]) == 2
    assert main(["simulate", "--model", "gyrator"]) == 2  # wrong kind
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(LINEAR_DOC))
    assert main(["check-reciprocity", "--model", "gyrator",
                 "--input", str(path)]) == 2
    capsys.readouterr()


def test_tol_override_forces_failure(tmp_path):
    code = main(["check-reciprocity", "--model", "brayton-moser",
                 "--samples", "20", "--tol", "reciprocity=1e-18",
                 "--out", str(tmp_path)])
    assert code == 1
    assert read_report(tmp_path)["ok"] is False


def test_numerical_failure_exit_code(tmp_path):
    doc = {
        "kind": "nonlinear",
        "potential": {"polynomial": {"dim": 1,
                                     "terms": [{"exponents": [2], "coeff": -0.5}]}},
        "metric": {"constant": [[1.0]]},
        "g": [[1.0]],
    }
    path = tmp_path / "unstable.json"
    path.write_text(json.dumps(doc))
    # x' = +x leaves the unit box before the default horizon
    assert main(["variational-test", "--input", str(path),
                 "--horizon", "4.0", "--out", str(tmp_path)]) == 3


def test_model_path_extends_registry(tmp_path, monkeypatch):
    doc = dict(LINEAR_DOC)
    doc["name"] = "extra-osc"
    path = tmp_path / "extra.json"
    path.write_text(json.dumps(doc))
    monkeypatch.setenv("RECIPKIT_MODEL_PATH", str(path))
    assert main(["check-reciprocity", "--model", "extra-osc",
                 "--out", str(tmp_path)]) == 0
    assert read_report(tmp_path)["model"] == "extra-osc"

    shadow = dict(LINEAR_DOC)
    shadow["name"] = "gyrator"
    path.write_text(json.dumps(shadow))
    assert main(["check-reciprocity", "--model", "gyrator"]) == 2
