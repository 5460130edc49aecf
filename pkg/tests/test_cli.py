import json

import numpy as np
import pytest

from bearing_angle import cli
from bearing_angle.errors import NumericalFailure
from bearing_angle.records import csv_body, read_table
from bearing_angle.sim.montecarlo import monte_carlo as real_monte_carlo


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_json(path):
    return json.loads(path.read_text())


def test_simulate_outputs(tmp_path):
    out = tmp_path / "s1"
    assert run("simulate", "--preset", "s1-circle", "--runs", 3, "--seed", 7, "--out", out) == 0
    for name in ("aggregate.csv", "summary.json", "config.json", "run_000.csv", "run_000_measurements.csv"):
        assert (out / name).exists()
    summary = read_json(out / "summary.json")
    assert summary["runs"] == 3 and summary["seeds"] == [7, 8, 9]
    for mode in ("bearing_angle", "bearing_only"):
        assert len(summary["modes"][mode]["per_step"]["position_rmse"]) == len(summary["times"])
    assert summary["provenance"]["seed"] == 7
    for name in ("aggregate.csv", "run_000.csv"):
        text = (out / name).read_text()
        assert "# config_sha256:" in text and "# version:" in text
    assert not (out / "run_001.csv").exists()


def test_per_run_files(tmp_path):
    assert run("simulate", "--preset", "s2-line", "--runs", 2, "--per-run", "--out", tmp_path) == 0
    assert (tmp_path / "run_001.csv").exists() and (tmp_path / "run_001_measurements.csv").exists()


def test_bearing_only_divergence_flagged(tmp_path, capsys):
    assert run("simulate", "--preset", "s2-line", "--runs", 3, "--filter", "bearing_only", "--out", tmp_path) == 0
    summary = read_json(tmp_path / "summary.json")
    assert list(summary["modes"]) == ["bearing_only"]
    assert summary["modes"]["bearing_only"]["diverged"] is True
    assert "DIVERGED" in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("simulate", "--preset", "s3-png", "--runs", 2, "--seed", 3, "--out", tmp_path / d) == 0
    for name in ("aggregate.csv", "run_000.csv", "run_000_measurements.csv"):
        a = (tmp_path / "a" / name).read_text()
        b = (tmp_path / "b" / name).read_text()
        assert csv_body(a) == csv_body(b)


def test_dump_config_round_trip(tmp_path, capsys):
    assert run("simulate", "--preset", "s2-line", "--runs", 4, "--dump-config") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["runs"] == 4
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    assert run("simulate", "--config", path, "--dump-config") == 0
    assert json.loads(capsys.readouterr().out) == doc


def test_env_override(monkeypatch, capsys):
    monkeypatch.setenv("BEARING_ANGLE_RUNS", "6")
    monkeypatch.setenv("BEARING_ANGLE_SEED", "21")
    assert run("simulate", "--preset", "s1-circle", "--dump-config") == 0
    doc = json.loads(capsys.readouterr().out)
    assert (doc["runs"], doc["seed"]) == (6, 21)
    assert run("simulate", "--preset", "s1-circle", "--runs", 2, "--dump-config") == 0
    assert json.loads(capsys.readouterr().out)["runs"] == 2


def test_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x",\n  "runs": ,}')
    assert run("simulate", "--config", bad) == 1
    assert "line 2" in capsys.readouterr().err
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"name": "x", "speed_of_light": 3}))
    assert run("simulate", "--config", unknown) == 1
    assert "speed_of_light" in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    assert excinfo_code(["simulate", "--bogus"]) == 1
    assert excinfo_code(["simulate", "--preset", "nope"]) == 1
    assert excinfo_code([]) == 1


def excinfo_code(argv):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    return exc.value.code


def test_numerical_failure_exit_two(monkeypatch, tmp_path, capsys):
    def boom(*a, **k):
        raise NumericalFailure("covariance blew up")

    monkeypatch.setattr(cli, "monte_carlo", boom)
    assert run("simulate", "--preset", "s1-circle", "--out", tmp_path) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_failed_runs_write_manifest(monkeypatch, tmp_path):
    def flaky(cfg, runs=None, return_batch=False):
        agg, batch = real_monte_carlo(cfg, runs, return_batch=True)
        batch.traces["bearing_angle"].failed_at[1] = 17
        return agg, batch

    monkeypatch.setattr(cli, "monte_carlo", flaky)
    assert run("simulate", "--preset", "s1-circle", "--runs", 2, "--out", tmp_path) == 2
    manifest = read_json(tmp_path / "failures.json")
    assert manifest["failures"] == [{"source": "bearing_angle", "seed": 1, "step": 17}]
    assert (tmp_path / "summary.json").exists()


def obs_report(capsys, *argv):
    code = run("observability", *argv)
    captured = capsys.readouterr()
    return code, (json.loads(captured.out) if code == 0 else captured.err)


def test_observability_constant_velocity(tmp_path, capsys):
    cfg = tmp_path / "w.json"
    cfg.write_text(json.dumps({
        "target": {"kind": "polynomial", "coefficients": [[0, 10, 0], [0.5, 0, 0]]},
        "observer": {"kind": "polynomial", "coefficients": [[0, 0, 0], [0, 1, 0]]},
        "samples": 8,
    }))
    code, rep = obs_report(capsys, "--config", cfg)
    assert code == 0
    assert rep["rank"] == 6 and rep["verdict"] == "unobservable"
    assert len(rep["null_basis"]) == 1 and rep["recovered"] is None
    assert "rank deficient" in rep["recovery_error"]


def test_observability_default_window(capsys):
    code, rep = obs_report(capsys)
    assert code == 0 and rep["verdict"] == "observable"
    np.testing.assert_allclose(rep["recovered"]["target_coefficients"], [[0, 10, 0], [0.5, 0, 0]], atol=1e-8)
    assert "provenance" in rep


def test_observability_along_bearing_preset(capsys):
    code, rep = obs_report(capsys, "--preset", "s2-line", "--order", 0)
    assert code == 0
    assert rep["verdict"] == "observable"
    np.testing.assert_allclose(rep["recovered"]["target_coefficients"][0], [0, 10, 0], atol=1e-8)


def test_observability_insufficient(capsys):
    code, err = obs_report(capsys, "--samples", 2, "--order", 1)
    assert code == 1 and "insufficient observations" in err
    code, err = obs_report(capsys, "--samples", 1, "--order", 0)
    assert code == 1 and "insufficient observations" in err


def test_observability_from_recording(tmp_path, capsys):
    assert run("simulate", "--preset", "s2-line", "--runs", 1, "--out", tmp_path) == 0
    capsys.readouterr()
    out = tmp_path / "report.json"
    assert run("observability", "--run", tmp_path / "run_000_measurements.csv", "--order", 0, "--out", out) == 0
    rep = read_json(out)
    assert rep["samples"] == 800 and rep["target_order"] == 0


def test_estimate_replays_simulation(tmp_path, capsys):
    assert run("simulate", "--preset", "s2-line", "--runs", 1, "--out", tmp_path) == 0
    capsys.readouterr()
    assert run("simulate", "--preset", "s2-line", "--runs", 1, "--dump-config") == 0
    cfg = tmp_path / "scenario.json"
    cfg.write_text(capsys.readouterr().out)
    est_path = tmp_path / "est.csv"
    assert run("estimate", "--measurements", tmp_path / "run_000_measurements.csv",
               "--config", cfg, "--filter", "both", "--out", est_path) == 0
    series = read_table(tmp_path / "run_000.csv")
    for mode in ("bearing_angle", "bearing_only"):
        est = read_table(tmp_path / f"est_{mode}.csv")
        np.testing.assert_array_equal(est["ptx"], series[f"{mode}_px"][1:])
        np.testing.assert_array_equal(est["vty"], series[f"{mode}_vy"][1:])
    text = (tmp_path / "est_bearing_angle.csv").read_text()
    header = csv_body(text).splitlines()[0]
    assert header == "t,ptx,pty,ptz,vtx,vty,vtz,ell,P00,P11,P22,P33,P44,P55,P66,flags"


def test_estimate_with_separate_observer_and_gap(tmp_path):
    lines = ["t,gx,gy,gz,theta"]
    obs = ["t,pox,poy,poz"]
    for k in range(1, 30):
        if k in (10, 11):
            continue
        t = 0.02 * k
        y = 4.0 * t
        lines.append(f"{t!r},0,1,0,{float(2 * np.arctan(0.5 / (10 - y)))!r}")
        obs.append(f"{t!r},0,{y!r},0")
    (tmp_path / "m.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "o.csv").write_text("\n".join(obs) + "\n")
    out = tmp_path / "est.csv"
    assert run("estimate", "--measurements", tmp_path / "m.csv", "--observer", tmp_path / "o.csv",
               "--out", out) == 0
    body = csv_body(out.read_text()).splitlines()
    flags = [row.rsplit(",", 1)[1] for row in body[1:]]
    assert flags.count("gap") == 2 and len(flags) == 29


def test_estimate_schema_errors(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("t,gx,gy,gz,theta,pox,poy,poz\n")
    assert run("estimate", "--measurements", empty) == 1
    missing = tmp_path / "missing.csv"
    missing.write_text("t,gx,gy,gz,pox,poy,poz\n0,0,1,0,0,0,0\n")
    assert run("estimate", "--measurements", missing) == 1
    assert "theta" in capsys.readouterr().err
    obs = tmp_path / "obs.csv"
    obs.write_text("t,pox,poy,poz\n0.5,0,0,0\n")
    meas = tmp_path / "m.csv"
    meas.write_text("t,gx,gy,gz,theta\n0,0,1,0,0.1\n")
    assert run("estimate", "--measurements", meas, "--observer", obs) == 1
    assert "'t'" in capsys.readouterr().err


def test_estimate_dump_config(capsys):
    assert run("estimate", "--dump-config") == 0
    assert json.loads(capsys.readouterr().out)["mode"] == "bearing_angle"
