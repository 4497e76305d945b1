import csv
import json
import subprocess
import sys
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qjwork import cli
from qjwork.cli import ConfigError, RunConfig, main


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


configs = st.builds(
    RunConfig,
    beta_hbar_omega0=st.floats(0, 5),
    gamma_down=st.floats(0, 1),
    gamma_up=st.none() | st.floats(0, 1),
    lambda0=st.floats(0, 1),
    n_cycles=st.floats(0.5, 20),
    n_trajectories=st.integers(1, 10 ** 6),
    seed=st.integers(0, 2 ** 64 - 1),
    workers=st.integers(1, 16),
    lambda0_grid=st.lists(st.floats(0, 1), max_size=4),
    method=st.sampled_from(["waiting", "step"]),
    broken_detailed_balance=st.booleans(),
)


@settings(max_examples=50)
@given(configs)
def test_config_json_round_trip(cfg):
    assert RunConfig.from_json(cfg.to_json()) == cfg


def test_config_rejects_unknown_and_bad_values():
    with pytest.raises(ConfigError, match="colour"):
        RunConfig.from_dict({"colour": 1})
    with pytest.raises(ConfigError, match="seed"):
        RunConfig.from_dict({"seed": 1.5})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"broken_detailed_balance": "yes"})


def test_precedence_defaults_file_flags(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"lambda0": 0.3, "seed": 5, "n_cycles": 2}))
    parser = cli.build_parser()
    cfg = cli.resolve_config(parser.parse_args(["trace"]))
    assert (cfg.lambda0, cfg.seed, cfg.n_cycles) == (0.1, 0, 8.0)
    cfg = cli.resolve_config(parser.parse_args(["trace", "--config", str(conf)]))
    assert (cfg.lambda0, cfg.seed, cfg.n_cycles) == (0.3, 5, 2.0)
    cfg = cli.resolve_config(parser.parse_args(
        ["trace", "--config", str(conf), "--seed", "9"]))
    assert (cfg.lambda0, cfg.seed, cfg.n_cycles) == (0.3, 9, 2.0)


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["trace", "--dt-per-cycle", "0", "--out", str(tmp_path)]) == 2
    assert main(["trace", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["trace", "--config", str(bad)]) == 2
    assert main(["ensemble", "--method", "magic", "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_step_too_large_exits_2(tmp_path, capsys):
    code = main(["trace", "--gamma-down", "5", "--dt-per-cycle", "10",
                 "--out", str(tmp_path)])
    assert code == 2
    assert "dt_per_cycle" in capsys.readouterr().err


def test_unwritable_output_exits_2(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("x")
    assert main(["analytics", "--lambda0-grid", "0.1", "--gamma-down-grid", "0.01",
                 "--out", str(blocker / "x")]) == 2


def test_small_ensemble_is_fast(tmp_path):
    main(["ensemble", "-n", "10", "--gamma-down-grid", "0.01", "--bootstrap", "100",
          "--out", str(tmp_path / "warm")])
    start = time.perf_counter()
    code = main(["ensemble", "-n", "10", "--gamma-down-grid", "0.01", "--bootstrap", "100",
                 "--out", str(tmp_path / "run")])
    assert code == 0
    assert time.perf_counter() - start < 1.0
    rows = read_csv(tmp_path / "run" / "ensemble_g0.01.csv")
    assert len(rows) == 10
    assert (tmp_path / "run" / "histogram_g0.01.svg").exists()
    assert (tmp_path / "run" / "ensemble_config.json").exists()


def test_ensemble_reruns_are_byte_identical(tmp_path):
    args = ["ensemble", "-n", "500", "--gamma-down-grid", "0,0.01", "--bootstrap", "100"]
    for d in ("a", "b"):
        assert main(args + ["--out", str(tmp_path / d)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "summary.csv" in names and "histogram_g0.svg" in names
    # the saved config records output_dir, which differs by construction
    for name in (n for n in names if not n.endswith("_config.json")):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_undriven_isolated_trace_is_flat(tmp_path):
    code = main(["trace", "--gamma-down", "0", "--lambda0", "0", "--seed", "4",
                 "--out", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "trace.csv")
    pops = np.array([float(r["pop_e"]) for r in rows])
    assert np.all(pops == pops[0])
    assert all(r["jump_flag"] == "0" for r in rows)
    assert (tmp_path / "trace.svg").exists()


def test_trace_window_layout(tmp_path):
    main(["trace", "--n-cycles", "1", "--prelude-cycles", "1", "--tail-cycles", "1",
          "--out", str(tmp_path)])
    t = np.array([float(r["t"]) for r in read_csv(tmp_path / "trace.csv")])
    assert t[0] == pytest.approx(-2 * np.pi)
    assert t[-1] == pytest.approx(4 * np.pi)
    assert np.all(np.diff(t) > 0)


def test_analytics_grid(tmp_path):
    code = main(["analytics", "--lambda0-grid", "0.02,0.1", "--gamma-down-grid",
                 "0,0.01,0.02", "--out", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "analytics.csv")
    assert len(rows) == 6
    assert {(r["lambda0"], r["gamma_down"]) for r in rows} == {
        (lam, g) for lam in ("0.02", "0.1") for g in ("0.0", "0.01", "0.02")}
    assert (tmp_path / "analytics.svg").exists()


def test_sweep_grid_with_monte_carlo(tmp_path):
    code = main(["sweep", "--lambda0-grid", "0.1", "--gamma-down-grid", "0.01,0.02",
                 "-n", "2000", "--bootstrap", "100", "--out", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 2
    assert all(r["mc_n"] for r in rows)


def test_validate_passes_and_detects_broken_balance(tmp_path):
    assert main(["validate", "-n", "2000", "--workers", "4", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "validate.txt").read_text()
    assert text.count("PASS") == 6
    assert main(["validate", "-n", "2000", "--workers", "4", "--broken-detailed-balance",
                 "--out", str(tmp_path / "broken")]) == 1
    assert "FAIL" in (tmp_path / "broken" / "validate.txt").read_text()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qjwork", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for name in cli.SUBCOMMANDS:
        assert name in proc.stdout
