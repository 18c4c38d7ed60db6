"""Command-line interface: exit codes, artifacts, determinism."""
import json

import pytest

from qperm.cli import BUILTIN_GROUPS, load_group, main


def run(args):
    return main([str(a) for a in args])


def test_validate_builtins_pass(capsys):
    for name in ("kp", "s3", "dual-z2", "dual-d4"):
        assert run(["validate", name]) == 0
        out = capsys.readouterr().out
        assert "ok" in out and "FAIL" not in out


def test_validate_unknown_group_is_input_error(capsys):
    assert run(["validate", "no-such-group"]) == 2


def test_validate_corrupted_table(tmp_path, capsys):
    bad = {"kind": "dual",
           "group_table": [[0, 1], [1, 1]],   # no inverses: not a group
           "generators": [{"element": 1, "order": 2}]}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    assert run(["validate", p]) == 1
    assert "axiom" in capsys.readouterr().err
    not_closed = {"kind": "classical",
                  "permutations": [[0, 1, 2], [1, 0, 2], [1, 2, 0]]}
    p.write_text(json.dumps(not_closed))
    assert run(["validate", p]) == 1


def test_validate_classical_file(tmp_path):
    spec = {"kind": "classical", "permutations": [[0, 1], [1, 0]]}
    p = tmp_path / "s2.json"
    p.write_text(json.dumps(spec))
    assert run(["validate", p]) == 0


def test_validate_kac_paljutkin_file(tmp_path):
    p = tmp_path / "kp.json"
    p.write_text(json.dumps({"kind": "kac_paljutkin", "tolerance": 1e-9}))
    assert run(["validate", p]) == 0


def test_run_unknown_experiment(tmp_path, capsys):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps({"name": "nope", "group": "kp"}))
    assert run(["run", p, "--out", tmp_path / "out"]) == 2


def test_run_randomized_requires_seed(tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps({"name": "bounds-empirical", "group": "kp",
                             "parameters": {"n_samples": 5}}))
    assert run(["run", p, "--out", tmp_path / "out"]) == 2


def test_phase_diagram_deterministic(tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps({"name": "phase-diagram", "group": "kp",
                             "parameters": {"n": 21}}))
    assert run(["run", p, "--out", tmp_path / "a"]) == 0
    assert run(["run", p, "--out", tmp_path / "b"]) == 0
    a = (tmp_path / "a" / "phase_diagram.csv").read_bytes()
    b = (tmp_path / "b" / "phase_diagram.csv").read_bytes()
    assert a == b
    header = a.decode().splitlines()[0]
    assert header == "alpha,beta,region,q2i,q3i,qhalfw,lower,upper"


def test_bounds_experiment_deterministic(tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps({"name": "bounds-empirical", "group": "kp",
                             "parameters": {"n_samples": 20, "seed": 5}}))
    assert run(["run", p, "--out", tmp_path / "a"]) == 0
    assert run(["run", p, "--out", tmp_path / "b"]) == 0
    assert (tmp_path / "a" / "bounds.json").read_bytes() == \
        (tmp_path / "b" / "bounds.json").read_bytes()


def test_run_with_declared_outputs(tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps({"name": "classical-version", "group": "kp",
                             "outputs": ["cv-kp.json"]}))
    assert run(["run", p, "--out", tmp_path / "out"]) == 0
    data = json.loads((tmp_path / "out" / "cv-kp.json").read_text())
    assert data["order"] == 4
    assert abs(data["alpha_haar"] - 0.5) < 1e-12


def test_report_empty_dir_fails(tmp_path):
    assert run(["report", tmp_path]) == 2


def test_report_aggregates(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"name": "classical-version", "group": "dual-s4"}))
    out = tmp_path / "out"
    assert run(["run", spec, "--out", out]) == 0
    spec.write_text(json.dumps({"name": "dihedral-sweep", "group": "dual-d3",
                                "parameters": {"m_values": [3, 4]}}))
    assert run(["run", spec, "--out", out]) == 0
    assert run(["report", out]) == 0
    printed = capsys.readouterr().out
    assert "classical_version" in printed
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["classical_version"]["alpha_haar"] - 11 / 12) < 1e-12


def test_haar_experiment(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"name": "haar", "group": "kp"}))
    assert run(["run", spec, "--out", tmp_path / "out"]) == 0
    data = json.loads((tmp_path / "out" / "haar.json").read_text())
    assert abs(data["alpha_haar"] - 0.5) < 1e-12
    assert data["matches_stored"] < 1e-10


def test_all_builtins_construct():
    for name in BUILTIN_GROUPS:
        G = load_group(name)
        assert G.dim >= 1


def test_every_experiment_runs(tmp_path):
    cases = [
        ("haar", "kp", {}),
        ("classical-version", "dual-s4", {}),
        ("stabiliser", "kp", {"partition": [[0], [1, 2, 3]], "seed": 1}),
        ("idempotent-census", "kp", {"n_seeds": 5, "seed": 2}),
        ("phase-diagram", "kp", {"n": 11}),
        ("bounds-empirical", "kp", {"n_samples": 10, "seed": 3}),
        ("periodicity", "s4", {}),
        ("periodicity", "kp", {}),
        ("fix-spectrum", "dual-s4", {}),
        ("s4hat-walkthrough", "dual-s4", {}),
        ("dihedral-sweep", "dual-d3", {"m_values": [3, 4]}),
    ]
    spec = tmp_path / "spec.json"
    out = tmp_path / "out"
    for name, group, params in cases:
        spec.write_text(json.dumps({"name": name, "group": group,
                                    "parameters": params}))
        assert run(["run", spec, "--out", out]) == 0, name
    produced = {p.name for p in out.iterdir()}
    assert "s4hat.json" in produced and "census.json" in produced
    s4hat = json.loads((out / "s4hat.json").read_text())
    assert s4hat["converged_to_haar"] is True
    assert s4hat["haar_weight_at_lambda_plus"] > 0
    assert s4hat["limit_has_integer_fixed_points"] is False
