from __future__ import annotations

import json

import pytest

from grprep.circuit_ir import parse_circuit
from grprep.cli import main
from grprep.errors import InvariantError, ValidationError
from grprep.harness import (
    ExperimentConfig,
    ResultRecord,
    d_from_density,
    instance_seed,
    parse_csv_rows,
    random_instance,
    run_experiment,
    run_pipeline,
)
from grprep.state_model import dump_state_text, normalize_and_validate

from conftest import small_state


def test_random_instance_deterministic():
    a = random_instance(10, 20, 123)
    b = random_instance(10, 20, 123)
    assert a == b
    assert random_instance(10, 20, 124) != a
    assert a.d == 20 and all(0 < v <= 1 for v in a.entries.values())


def test_random_instance_dense_and_range():
    s = random_instance(4, 16, 0)
    assert sorted(s.entries) == list(range(16))
    with pytest.raises(ValidationError):
        random_instance(3, 9, 0)
    with pytest.raises(ValidationError):
        random_instance(3, 0, 0)


def test_d_from_density():
    assert d_from_density(20, 1e-5) == 10
    assert d_from_density(20, 1e-3) == 1049
    assert d_from_density(4, 1e-9) == 1


def test_instance_seed_distinct():
    seeds = {instance_seed(0, p, r) for p in range(5) for r in range(20)}
    assert len(seeds) == 100


def test_pipeline_example_exact_budget():
    rec = run_pipeline(small_state(), f_min=1.0, intervals=20)
    assert rec.cnots_after_exact == rec.cnots_after_approx == 6
    assert rec.f_est == 1.0 and rec.f_lb == 1.0 and rec.f_true == pytest.approx(1.0)


def test_pipeline_single_basis_state():
    rec = run_pipeline(normalize_and_validate([(9, 1.0)], 6), f_min=0.9)
    # unmerged baselines still pay for controls; both optimized stages strip them all
    assert rec.cnots_after_exact == rec.cnots_after_approx == rec.cnots_merged_singles == 0
    assert rec.cnots_unmerged_singles > 0 and rec.cnots_ucr_only > 0
    assert rec.f_est == rec.f_lb == 1.0 and rec.f_true == pytest.approx(1.0)


def test_pipeline_exact_only_leaves_approx_empty():
    rec = run_pipeline(random_instance(12, 10, 3))
    assert rec.cnots_after_approx is None and rec.f_true is None
    assert rec.violations() == []


def test_pipeline_n20_guarantees():
    state = random_instance(20, d_from_density(20, 1e-5), 77)
    rec = run_pipeline(state, f_min=0.95, intervals=20)
    assert rec.f_true >= rec.f_lb - 1e-10
    assert rec.f_est >= 0.95
    assert rec.cnots_after_approx <= rec.cnots_after_exact <= min(rec.cnots_ucr_only, rec.cnots_unmerged_singles)


def test_record_violations():
    rec = ResultRecord(None, 3, 2, 10, 4, 12, 8, f_true=0.5, f_lb=0.6)
    assert len(rec.violations()) == 2


def test_invariant_error_raised(monkeypatch):
    import grprep.harness as h

    monkeypatch.setattr(h, "lower_bound", lambda clusters, table: 2.0)
    with pytest.raises(InvariantError):
        run_pipeline(random_instance(8, 10, 0), f_min=0.9)


def small_config(experiment, **kw):
    base = dict(n=10, sparsities=(0.01, 0.03), f_mins=(0.9,), intervals=(5,), reps=3, seed=5)
    base.update(kw)
    return ExperimentConfig(experiment, **base)


@pytest.mark.parametrize("experiment", ["merge_ratio", "cost_comparison", "estimator_gap", "approx_vs_exact", "m_sweep"])
def test_experiment_csv_deterministic(experiment):
    a = run_experiment(small_config(experiment)).to_csv()
    b = run_experiment(small_config(experiment)).to_csv()
    assert a == b
    lines = a.splitlines()
    assert lines[0].startswith("# grprep experiment csv") and "amplitudes=uniform(0,1]" in lines[1]
    rows = parse_csv_rows(a)
    assert rows and all(float(r["min"]) <= float(r["mean"]) <= float(r["max"]) for r in rows)
    assert {r["reps"] for r in rows} == {"3"}


def test_experiment_parallel_matches_serial():
    serial = run_experiment(small_config("approx_vs_exact")).to_csv()
    parallel = run_experiment(small_config("approx_vs_exact", jobs=2)).to_csv()
    assert serial == parallel


def test_experiment_ratios_bounded():
    res = run_experiment(small_config("approx_vs_exact", f_mins=(0.8, 0.95)))
    for r in parse_csv_rows(res.to_csv()):
        if r["metric"] == "approx_over_exact":
            assert float(r["max"]) <= 1.0


def test_experiment_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig("fig9")
    with pytest.raises(ValidationError):
        ExperimentConfig("merge_ratio", reps=0)
    with pytest.raises(ValidationError):
        ExperimentConfig("merge_ratio", n=3, sparsities=(2.0,))
    cfg = ExperimentConfig.defaults("estimator_gap")
    assert cfg.n == 15 and cfg.intervals == (20,)


# ------------------------------------------------------------------- CLI

@pytest.fixture
def state_file(tmp_path):
    path = tmp_path / "state.txt"
    path.write_text(dump_state_text(small_state()))
    return path


def test_cli_prepare_and_simulate(tmp_path, state_file, capsys):
    out = tmp_path / "base.json"
    assert main(["prepare", str(state_file), "--out", str(out)]) == 0
    assert parse_circuit(out.read_text()).gate_count == 4
    capsys.readouterr()
    assert main(["simulate", str(out), "--target", str(state_file)]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("n=3\n001 ")
    assert json.loads(captured.err)["overlap"] == pytest.approx(1.0)


def test_cli_optimize_exact_with_log(tmp_path, state_file, capsys):
    out = tmp_path / "exact.json"
    assert main(["--emit-log", "optimize-exact", str(state_file), "--out", str(out)]) == 0
    err = [json.loads(line) for line in capsys.readouterr().err.splitlines()]
    assert err[0] == {"k": 2, "kind": "strip", "before": ["01"], "after": "e1"}
    assert err[-1]["total"] == 6


def test_cli_optimize_approx(state_file, capsys):
    assert main(["optimize-approx", str(state_file), "--fmin", "0.9", "--intervals", "5"]) == 0
    captured = capsys.readouterr()
    parse_circuit(captured.out)
    rec = json.loads(captured.err)
    assert rec["f_true"] >= rec["f_lb"] - 1e-10 and rec["f_est"] >= 0.9


def test_cli_pipeline_and_experiment(tmp_path, state_file, capsys):
    assert main(["pipeline", str(state_file), "--fmin", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["cnots_after_approx"] == 6
    out = tmp_path / "exp.csv"
    args = ["experiment", "merge_ratio", "--n", "8", "--sparsity", "0.05", "--reps", "2", "--seed", "1", "--out", str(out)]
    assert main(args) == 0
    first = out.read_text()
    assert main(args) == 0
    assert out.read_text() == first


@pytest.mark.parametrize(
    "content, category",
    [("n=2\n00 1\n00 1\n", "duplicate_index"), ("n=2\n00 -1\n", "negative_amplitude"), ("n=2\n0 1\n", "parse")],
)
def test_cli_errors(tmp_path, capsys, content, category):
    path = tmp_path / "bad.txt"
    path.write_text(content)
    assert main(["prepare", str(path)]) != 0
    assert json.loads(capsys.readouterr().err)["error"] == category


def test_cli_missing_file(capsys):
    assert main(["simulate", "/nonexistent/circuit.json"]) != 0
    assert json.loads(capsys.readouterr().err)["error"] == "io"


def test_cli_bad_circuit(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n": 3, "layers": [{"k": 2, "gates": [{"pattern": "0e", "theta": 1}, {"pattern": "01", "theta": 1}]}]}))
    assert main(["simulate", str(path)]) != 0
    assert json.loads(capsys.readouterr().err)["error"] == "region_overlap"
