import dataclasses

import numpy as np
import pytest

from riskplan import config as cfgmod
from riskplan.config import ConfigError, ExperimentConfig
from riskplan.domains import make_domain
from riskplan.planners import Plan, init_policy
from riskplan.serialization import ParamsFormatError, ParamsMismatchError, dump_params, load_params, read_header


def test_policy_round_trip_is_exact(tmp_path):
    d = make_domain("hvac")
    p = init_policy(d, 3, widths=(6, 5))
    p.biases[0] = np.array([np.pi, -1e-300, 1e300, 0.1, 2 / 3, -0.0])
    path = tmp_path / "params.txt"
    dump_params(path, p, "hvac", 3, "abc123")
    q, header = load_params(path, expect_domain="hvac")
    assert header.seed == 3 and header.config_hash == "abc123" and header.representation == "drp"
    assert q.widths == (6, 5)
    for x, y in zip(p.parameters(), q.parameters()):
        assert np.array_equal(x, y)


def test_plan_round_trip(tmp_path):
    plan = Plan(np.arange(6.0).reshape(3, 2) / 7)
    path = tmp_path / "plan.txt"
    dump_params(path, plan, "navigation", 0)
    q, header = load_params(path)
    assert header.representation == "slp"
    assert np.array_equal(q.actions, plan.actions)


def test_domain_mismatch(tmp_path):
    path = tmp_path / "plan.txt"
    dump_params(path, Plan(np.zeros((2, 2))), "navigation", 0)
    with pytest.raises(ParamsMismatchError):
        load_params(path, expect_domain="reservoir")


def test_bad_files(tmp_path):
    junk = tmp_path / "junk.txt"
    junk.write_text("hello\n")
    with pytest.raises(ParamsFormatError):
        read_header(junk)
    path = tmp_path / "short.txt"
    dump_params(path, Plan(np.zeros((2, 2))), "navigation", 0)
    path.write_text("\n".join(path.read_text().splitlines()[:-1]) + "\n")
    with pytest.raises(ParamsFormatError):
        load_params(path)
    newer = tmp_path / "v9.txt"
    newer.write_text("riskplan-params 9\n")
    with pytest.raises(ParamsFormatError):
        read_header(newer)


@pytest.mark.parametrize("domain,method,lr,epochs,batch,beta,horizon", [
    ("navigation", "slp", 0.5, 1001, 8192, -1000.0, 20),
    ("navigation", "drp", 2.5e-4, 1001, 8192, -1000.0, 20),
    ("reservoir", "slp", 0.2, 501, 1024, -100.0, 50),
    ("reservoir", "drp", 5e-3, 501, 1024, -100.0, 50),
    ("hvac", "slp", 5e-3, 501, 128, -40.0, 125),
    ("hvac", "drp", 5e-3, 501, 128, -40.0, 125),
])
def test_table_defaults(domain, method, lr, epochs, batch, beta, horizon):
    c = ExperimentConfig(domain=domain, method=method).resolved()
    assert (c.lr, c.epochs, c.batch, c.beta, c.horizon) == (lr, epochs, batch, beta, horizon)
    assert c.hidden == (256, 128, 64, 32)


def test_overrides_win():
    c = ExperimentConfig(domain="reservoir", beta=0, epochs=3, lr=1.0).resolved()
    assert (c.beta, c.epochs, c.lr, c.batch) == (0.0, 3, 1.0, 1024)


def test_default_output_path(monkeypatch):
    monkeypatch.setenv(cfgmod.OUTPUT_ROOT_ENV, "/tmp/out")
    c = ExperimentConfig(domain="hvac", method="drp", seed=4).resolved()
    assert c.output == "/tmp/out/hvac_drp_beta-40_seed4"


@pytest.mark.parametrize("kwargs", [dict(domain="mars"), dict(method="mcts"), dict(objective="cvar")])
def test_unknown_names(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kwargs).resolved()


def test_ini_round_trip_and_hash():
    c = ExperimentConfig(domain="navigation", method="drp", seed=5, fixed_scenarios=True, grad_clip=None,
                         domain_params={"goal": (7.0, 8.0)}).resolved()
    back = cfgmod.from_ini(c.to_ini())
    assert back == c
    assert back.config_hash() == c.config_hash()
    assert ExperimentConfig(domain="navigation", seed=6).resolved().config_hash() != c.config_hash()
    moved = dataclasses.replace(c, output="/elsewhere")
    assert moved.config_hash() == c.config_hash()
    assert back.make_domain().params.goal == (7.0, 8.0)


def test_ini_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        cfgmod.from_ini("[training]\nmomentum = 0.9\n")
    with pytest.raises(ConfigError):
        cfgmod.from_ini("[domain]\nname = hvac\nwind = 3\n")
    with pytest.raises(ConfigError):
        cfgmod.from_ini("[training]\nfixed_scenarios = maybe\n")
    with pytest.raises(ConfigError):
        cfgmod.load("/nonexistent/config.ini")


def test_horizon_reaches_domain():
    c = ExperimentConfig(domain="hvac", horizon=7).resolved()
    assert c.make_domain().horizon == 7
