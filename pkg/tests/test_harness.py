import subprocess
import sys
from dataclasses import replace

import pytest

from hetassoc.association import SolverConfig
from hetassoc.cli import main
from hetassoc.harness import (CSV_COLUMNS, ExperimentConfig, TrialError, build_config,
                              read_config_file, read_rows, run_sweep, run_trial, trial_seed,
                              validate_csv)
from hetassoc.topology import DeploymentConfig


@pytest.fixture
def small_cfg(tmp_path):
    return ExperimentConfig(deployment=DeploymentConfig(pbs_per_macrocell=3),
                            sweep_values=(10,), trials=1,
                            output_path=str(tmp_path / "out.csv"))


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(sweep_values=())
    with pytest.raises(ValueError):
        ExperimentConfig(sweep_values=(20, 10))
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(strategies=("MAXSINR",))
    with pytest.raises(ValueError):
        ExperimentConfig(sweep_variable="trials")


def test_trial_seed_is_stable_and_distinct():
    assert trial_seed(0, 10, 0) == trial_seed(0, 10, 0)
    seeds = {trial_seed(b, v, t) for b in range(3) for v in (10, 20) for t in range(5)}
    assert len(seeds) == 30
    assert all(0 <= s < 2**64 for s in seeds)


def test_single_strategy_trial(small_cfg):
    cfg = replace(small_cfg, strategies=("MARA",))
    assert list(run_trial(cfg, 10, 0)) == ["MARA"]


def test_trial_is_deterministic(small_cfg):
    assert run_trial(small_cfg, 10, 3) == run_trial(small_cfg, 10, 3)
    assert run_trial(small_cfg, 10, 3) != run_trial(small_cfg, 10, 4)


def test_trial_whole_ee_dominance(small_cfg):
    for t in range(5):
        reps = run_trial(small_cfg, 20, t)
        assert all(reps["AMWEE"].whole_ee >= r.whole_ee for r in reps.values())


def test_trial_errors_carry_coordinates(small_cfg):
    cfg = replace(small_cfg, deployment=DeploymentConfig(pbs_per_macrocell=500))
    with pytest.raises(TrialError) as info:
        run_trial(cfg, 10, 2)
    assert info.value.sweep_value == 10 and info.value.trial_index == 2
    assert "trial=2" in str(info.value)


def test_sweep_row_count_and_schema(small_cfg):
    paths = run_sweep(small_cfg)
    rows = read_rows(paths["rows"])
    assert len(rows) == 5
    assert list(rows[0]) == CSV_COLUMNS
    assert [r["strategy"] for r in rows] == ["MARA", "AUF", "AMSEE", "AMWEE", "EEAUF"]
    assert validate_csv(paths["rows"]) == []
    summary = read_rows(paths["summary"])
    assert len(summary) == 5 and summary[0]["trials"] == "1"
    header = paths["rows"].read_text().splitlines()[:3]
    assert header[0] == "# hetassoc sweep" and header[1].startswith("# config_digest ")
    assert "assumed" in header[2]


def test_sweep_writes_traces(small_cfg):
    paths = run_sweep(small_cfg)
    assert {"trace_AMWEE", "trace_EEAUF", "trace_AUF"} <= set(paths)
    lines = paths["trace_AMWEE"].read_text().splitlines()
    assert lines[0] == "# iteration\tgamma\tF"
    gammas = [float(ln.split("\t")[1]) for ln in lines[1:]]
    assert gammas == sorted(gammas)
    dual = paths["trace_EEAUF"].read_text().splitlines()
    assert dual[0] == "# iteration\tmax_residual\tdual_value" and len(dual) > 2


def test_sweep_byte_identical_and_parallel_order(small_cfg, tmp_path, monkeypatch):
    cfg = replace(small_cfg, sweep_values=(10, 20), trials=3)
    first = run_sweep(cfg)["rows"].read_bytes()
    assert run_sweep(cfg)["rows"].read_bytes() == first
    monkeypatch.setenv("HETASSOC_WORKERS", "2")
    assert run_sweep(cfg)["rows"].read_bytes() == first


def test_adding_sweep_points_keeps_existing_trials(small_cfg):
    a = read_rows(run_sweep(replace(small_cfg, sweep_values=(10,), trials=2))["rows"])
    b = read_rows(run_sweep(replace(small_cfg, sweep_values=(10, 20), trials=2))["rows"])
    assert a == b[:len(a)]


def test_failed_sweep_leaves_partial_marker(small_cfg):
    cfg = replace(small_cfg, sweep_variable="pbs_per_macrocell", sweep_values=(2, 500))
    with pytest.raises(TrialError):
        run_sweep(cfg)
    text = open(cfg.output_path).read()
    assert text.rstrip().splitlines()[-1].startswith("# PARTIAL OUTPUT:")
    assert len(read_rows(cfg.output_path)) == 5


def test_config_file_and_build(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("# comment\nusers_per_macrocell = 12\nsweep_variable = pbs_per_macrocell\n"
                    "sweep_values = 2, 4\nstrategies = MARA,AMWEE\nstepsize = 0.02\n"
                    "wrap_around = true\nmacro_pl = 128.1, 37.6\n")
    cfg = build_config(read_config_file(path))
    assert cfg.deployment.users_per_macrocell == 12
    assert cfg.deployment.wrap_around is True
    assert cfg.sweep_values == (2, 4)
    assert cfg.strategies == ("MARA", "AMWEE")
    assert cfg.solver == replace(SolverConfig(), stepsize=0.02)
    assert cfg.radio.macro_pl == (128.1, 37.6)
    path.write_text("bogus = 1\n")
    with pytest.raises(ValueError):
        read_config_file(path)


def test_sweep_variable_switch_picks_default_axis():
    cfg = build_config({"sweep_variable": "pbs_per_macrocell"})
    assert cfg.sweep_values == (2, 4, 6, 8, 10)


def test_cli_sweep_flags_override_file(tmp_path, capsys):
    cfgfile = tmp_path / "exp.cfg"
    cfgfile.write_text("trials = 5\nsweep_values = 10\n")
    out = tmp_path / "cli.csv"
    rc = main(["sweep", "--config", str(cfgfile), "--trials", "1",
               "--pbs-per-macrocell", "2", "--output-path", str(out)])
    assert rc == 0
    assert len(read_rows(out)) == 5
    assert "rows\t" in capsys.readouterr().out


def test_cli_trial_and_trace(capsys):
    assert main(["trial", "--sweep-values", "10", "--pbs-per-macrocell", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].startswith("strategy\tavg_rate")
    assert len(lines) == 7
    assert main(["trace", "--strategy", "EEAUF", "--sweep-values", "10"]) == 0
    assert capsys.readouterr().out.startswith("# iteration\tmax_residual")


def test_cli_validate(capsys):
    assert main(["validate", "--instances", "100"]) == 0
    out = capsys.readouterr().out
    assert "PASS  mara_sum_rate" in out and "FAIL" not in out


def test_cli_errors_give_nonzero_exit(tmp_path, capsys):
    assert main(["sweep", "--trials", "0", "--output-path", str(tmp_path / "x.csv")]) == 1
    assert "error:" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hetassoc", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0
    for sub in ("sweep", "trial", "trace", "validate"):
        assert sub in proc.stdout
