import json
import os

import numpy as np
import pytest

from empint.bounds import BoundConstants
from empint.cli import (CURVE_HEADER, ConfigError, execute, load_config, main,
                        overlay_bounds, run)
from empint.experiments import TailCurve


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _base_cfg(**over):
    cfg = {
        "experiment": "sup_tail",
        "seed": 11,
        "n": 64, "k": 1, "reps": 100,
        "space": {"points": 8, "weights": "uniform"},
        "family": {"kind": "interval", "sigma": 0.5, "grid": 8},
        "x_grid": {"start": 0.0, "stop": 1.5, "points": 7},
        "statistic": "J",
    }
    cfg.update(over)
    return cfg


def test_zero_reps_names_field(tmp_path, capsys):
    path = _write(tmp_path, _base_cfg(reps=0))
    code = run(path, str(tmp_path / "out"))
    assert code == 2
    assert "reps" in capsys.readouterr().err


def test_unknown_experiment_rejected(tmp_path):
    path = _write(tmp_path, _base_cfg(experiment="frobnicate"))
    with pytest.raises(ConfigError) as e:
        load_config(path)
    assert "experiment" in str(e.value)


def test_unreadable_config(tmp_path, capsys):
    code = run(str(tmp_path / "missing.json"), str(tmp_path / "out"))
    assert code == 2
    assert "config" in capsys.readouterr().err


def test_invalid_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(str(path), str(tmp_path / "out")) == 2


def test_successful_run_writes_both_files(tmp_path):
    path = _write(tmp_path, _base_cfg())
    out = tmp_path / "out"
    assert run(path, str(out)) == 0
    curve = (out / "curve.csv").read_text()
    assert curve.splitlines()[0] == CURVE_HEADER
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["experiment"] == "sup_tail"
    assert report["seed"] == 11
    assert "version" in report and "wall_clock_seconds" in report


def test_identical_config_twice_is_byte_identical(tmp_path):
    path = _write(tmp_path, _base_cfg())
    run(path, str(tmp_path / "a"))
    run(path, str(tmp_path / "b"))
    assert (tmp_path / "a" / "curve.csv").read_bytes() == \
        (tmp_path / "b" / "curve.csv").read_bytes()


def test_worker_count_does_not_change_curve(tmp_path):
    path = _write(tmp_path, _base_cfg())
    assert main(["run", path, "--out", str(tmp_path / "w1"), "--workers", "1"]) == 0
    assert main(["run", path, "--out", str(tmp_path / "w8"), "--workers", "8"]) == 0
    assert (tmp_path / "w1" / "curve.csv").read_bytes() == \
        (tmp_path / "w8" / "curve.csv").read_bytes()


def test_seed_override_embedded(tmp_path):
    path = _write(tmp_path, _base_cfg())
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out), "--seed", "99"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 99


def test_format_table_only(tmp_path):
    path = _write(tmp_path, _base_cfg())
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out), "--format", "table"]) == 0
    assert (out / "curve.csv").exists()
    assert not (out / "report.json").exists()


def test_format_report_only(tmp_path):
    path = _write(tmp_path, _base_cfg())
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out), "--format", "report"]) == 0
    assert not (out / "curve.csv").exists()
    assert (out / "report.json").exists()


def test_chaos_audit_matches_hand_enumeration(tmp_path):
    cfg = {
        "experiment": "chaos_audit", "seed": 0, "n": 4, "k": 1,
        "coefficients": {"index_tuples": [[0], [1], [2], [3]],
                         "values": [1, 1, 1, 1]},
        "x_grid": [0.0, 1.0, 2.0, 3.0, 4.0],
    }
    out = tmp_path / "out"
    assert run(_write(tmp_path, cfg), str(out)) == 0
    rows = (out / "curve.csv").read_text().splitlines()[1:]
    probs = [float(r.split(",")[1]) for r in rows]
    # |e1+e2+e3+e4| over 16 sign vectors: P(>0)=10/16, P(>2)=2/16, P(>4)=0
    assert probs == pytest.approx([0.625, 0.625, 0.125, 0.125, 0.0])


def test_schedule_audit_not_applicable_exits_3(tmp_path, capsys):
    cfg = {"experiment": "schedule_audit", "seed": 0, "n": 10, "k": 1,
           "sigma": 0.1, "x": 50.0, "A_bar": 2.0, "D": 1.0, "L": 1.0}
    assert run(_write(tmp_path, cfg), str(tmp_path / "out")) == 3
    assert "numerical check failed" in capsys.readouterr().err


def test_schedule_audit_success(tmp_path):
    cfg = {"experiment": "schedule_audit", "seed": 0, "n": 4096, "k": 1,
           "sigma": 0.5, "x": 2.0, "A_bar": 2.0, "D": 4.0, "L": 2.0}
    out = tmp_path / "out"
    assert run(_write(tmp_path, cfg), str(out)) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["payload"]["invariants_hold"] is True


def test_expansion_audit(tmp_path):
    cfg = {"experiment": "expansion_audit", "seed": 7, "n": 5, "k": 2,
           "space": {"points": 16, "weights": "uniform"},
           "trials": 30, "holdout_pairs": 10}
    out = tmp_path / "out"
    assert run(_write(tmp_path, cfg), str(out)) == 0
    payload = json.loads((out / "report.json").read_text())["payload"]
    assert payload["residual"] < 1e-8
    assert payload["holdout_max_relative_error"] < 1e-8
    assert len(payload["coefficients"]) == 3


def test_counterexample_via_cli(tmp_path):
    cfg = {"experiment": "counterexample", "seed": 5, "sigma": 0.3, "n": 500,
           "epsilon": 0.5, "reps": 40}
    out = tmp_path / "out"
    assert run(_write(tmp_path, cfg), str(out)) == 0
    payload = json.loads((out / "report.json").read_text())["payload"]
    assert 0.0 <= payload["p_high"] <= payload["p_low"] <= 1.0
    rows = (out / "curve.csv").read_text().splitlines()
    assert len(rows) == 3  # header + the two probed thresholds


def test_symmetrization_via_cli(tmp_path):
    cfg = {"experiment": "symmetrization", "seed": 3, "n": 128, "k": 1,
           "reps": 200, "x": 0.4,
           "space": {"points": 16, "weights": "uniform"},
           "family": {"kind": "interval", "sigma": 0.5, "grid": 16}}
    out = tmp_path / "out"
    assert run(_write(tmp_path, cfg), str(out)) == 0
    payload = json.loads((out / "report.json").read_text())["payload"]
    assert 0 <= payload["lhs"] <= 1
    assert 0 <= payload["rhs"] <= 1


def test_singleton_table_round_trip(tmp_path):
    table = [[0.5, -0.5], [-0.5, 0.5]]
    cfg = _base_cfg(k=2, space={"points": 2, "weights": "uniform"},
                    family={"kind": "singleton", "table": table},
                    x_grid=[0.0, 0.5, 1.0])
    out = tmp_path / "out"
    assert run(_write(tmp_path, cfg), str(out)) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["family"]["table"] == table


def test_family_arity_mismatch_names_field(tmp_path, capsys):
    cfg = _base_cfg(k=2)  # interval family is k = 1
    assert run(_write(tmp_path, cfg), str(tmp_path / "out")) == 2
    assert "family" in capsys.readouterr().err


def test_random_canonical_family(tmp_path):
    cfg = _base_cfg(k=2, space={"points": 4, "weights": "uniform"},
                    family={"kind": "random-canonical", "count": 3,
                            "kernel_seed": 4},
                    x_grid=[0.0, 1.0, 2.0], statistic="I", n=32)
    assert run(_write(tmp_path, cfg), str(tmp_path / "out")) == 0


def test_explicit_weights_space(tmp_path):
    cfg = _base_cfg(space={"weights": [0.25, 0.25, 0.25, 0.25]},
                    family={"kind": "singleton", "table": [1.0, -1.0, 0.5, -0.5]},
                    x_grid=[0.0, 1.0])
    assert run(_write(tmp_path, cfg), str(tmp_path / "out")) == 0


def test_decreasing_grid_rejected(tmp_path, capsys):
    cfg = _base_cfg(x_grid=[1.0, 0.5])
    assert run(_write(tmp_path, cfg), str(tmp_path / "out")) == 2
    assert "x_grid" in capsys.readouterr().err


# --- overlay_bounds --------------------------------------------------------

def test_overlay_empty_grid():
    curve = TailCurve(x_grid=np.array([]), probs=np.array([]),
                      ci_lo=np.array([]), ci_hi=np.array([]), replications=1)
    rows = overlay_bounds(curve, 1, 0.5, 4.0, 2.0, 0.0, 100, BoundConstants(k=1))
    assert rows == []


def test_overlay_bound_capped_at_one():
    p = np.array([0.9, 0.5])
    curve = TailCurve(x_grid=np.array([0.0, 0.1]), probs=p, ci_lo=p, ci_hi=p,
                      replications=100)
    rows = overlay_bounds(curve, 1, 0.5, 4.0, 2.0, 0.0, 100, BoundConstants(k=1))
    for r in rows:
        assert 0 < r["theorem_bound"] <= 1
        assert 0 < r["corollary_bound"] <= 1
