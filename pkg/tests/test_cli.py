import configparser
import subprocess
import sys

import numpy as np
import pytest

from riskplan import cli
from riskplan.config import load
from riskplan.evaluation import ReturnSamples

TINY = ["--epochs", "3", "--batch", "8", "--horizon", "4", "--hidden", "8,4", "--episodes", "40"]


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def nav_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("nav")
    assert run("train", "--domain", "navigation", "--method", "drp", "--output", out, *TINY) == 0
    return out


def test_train_writes_reconstructible_run(nav_run):
    for name in ("config.ini", "params.txt", "trace.csv"):
        assert (nav_run / name).exists()
    cfg = load(nav_run / "config.ini")
    assert (cfg.domain, cfg.method, cfg.epochs, cfg.batch, cfg.horizon, cfg.hidden) == (
        "navigation", "drp", 3, 8, 4, (8, 4))
    assert cfg.lr == 2.5e-4 and cfg.beta == -1000.0
    assert cfg.domain_params["goal"] == (8.0, 9.0)
    trace = np.genfromtxt(nav_run / "trace.csv", delimiter=",", names=True)
    assert trace.size == 3


def test_eval_outputs(nav_run, tmp_path, capsys):
    assert run("eval", "--config", nav_run / "config.ini", "--params", nav_run / "params.txt",
               "--output", tmp_path, "--keep-trajectories", "5") == 0
    printed = capsys.readouterr().out
    assert "variance = " in printed and "zone_entry_fraction" in printed
    returns = ReturnSamples.read_csv(tmp_path / "returns.csv").returns
    assert returns.size == 40
    assert (tmp_path / "summary.txt").read_text().count("hist_counts") == 1
    lines = (tmp_path / "trajectories.csv").read_text().splitlines()
    assert len(lines) == 1 + 5 * 5


def test_eval_is_reproducible(nav_run, tmp_path):
    for sub in ("a", "b"):
        run("eval", "--config", nav_run / "config.ini", "--params", nav_run / "params.txt",
            "--output", tmp_path / sub)
    assert (tmp_path / "a" / "returns.csv").read_bytes() == (tmp_path / "b" / "returns.csv").read_bytes()


def test_eval_domain_mismatch(nav_run, tmp_path):
    code = run("eval", "--domain", "reservoir", "--params", nav_run / "params.txt", "--output", tmp_path, *TINY)
    assert code == cli.EXIT_MISMATCH


def test_compare(tmp_path, capsys):
    gen = np.random.default_rng(0)
    ReturnSamples(gen.normal(0, 1, 500), 0, 500).write_csv(tmp_path / "a.csv")
    ReturnSamples(gen.normal(0, 4, 500), 0, 500).write_csv(tmp_path / "b.csv")
    report = tmp_path / "report.txt"
    assert run("compare", tmp_path / "a.csv", tmp_path / "b.csv", "--resamples", "500", "--report", report) == 0
    assert "verdict = a-lower-variance" in capsys.readouterr().out
    assert "variance_diff_ci" in report.read_text()
    assert run("compare", tmp_path / "a.csv", tmp_path / "missing.csv") == cli.EXIT_BAD_CONFIG


def test_sweep(tmp_path, capsys):
    assert run("sweep", "--domain", "navigation", "--method", "slp", "--betas", "0,-10", "--output", tmp_path,
               *TINY) == 0
    assert (tmp_path / "sweep.csv").exists()
    assert "-10" in capsys.readouterr().out


@pytest.mark.parametrize("argv,code", [
    (["train", "--domain", "mars"], cli.EXIT_UNKNOWN_NAME),
    (["train", "--method", "mcts"], cli.EXIT_UNKNOWN_NAME),
    (["train", "--objective", "cvar"], cli.EXIT_UNKNOWN_NAME),
    (["train", "--config", "/nonexistent.ini"], cli.EXIT_BAD_CONFIG),
    (["train", "--set", "wind=3"], cli.EXIT_BAD_CONFIG),
    (["train", "--set", "novalue"], cli.EXIT_BAD_CONFIG),
])
def test_error_exit_codes(argv, code, tmp_path):
    assert run(*argv, "--output", tmp_path) == code


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("this is not an ini file\n")
    assert run("train", "--config", bad, "--output", tmp_path) == cli.EXIT_BAD_CONFIG


def test_training_abort_exit_code(tmp_path):
    # navigation returns are in the hundreds, so |beta * G| at beta -50 is far past the guard
    code = run("train", "--domain", "navigation", "--objective", "exact-entropic", "--beta", "-50",
               "--output", tmp_path, *TINY)
    assert code == cli.EXIT_TRAINING


def test_config_file_then_flag_override(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[domain]\nname = reservoir\nrain_rate = 0.2\n[training]\nepochs = 2\nbatch = 4\nhorizon = 3\n"
                   "[method]\nhidden = 4\n")
    out = tmp_path / "run"
    assert run("train", "--config", ini, "--method", "drp", "--epochs", "1", "--output", out) == 0
    cp = configparser.ConfigParser()
    cp.read(out / "config.ini")
    assert cp["training"]["epochs"] == "1" and cp["domain"]["rain_rate"] == "0.2"


def test_quick_check(capsys):
    assert run("check", "--quick") == cli.EXIT_OK
    assert "checks passed" in capsys.readouterr().out


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "riskplan.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "compare" in out.stdout
