"""Desk-scale acceptance criteria.

Each test prints one PASS/FAIL line (soft checks print SOFT-PASS/SOFT-FAIL
and never fail the suite). Trained agents are cached for the session so the
sweep and bound checks reuse the agents of the per-domain criteria.
"""

import time

import numpy as np
import pytest

from riskplan import checks, cli
from riskplan import evaluation as ev
from riskplan import objectives as obj
from riskplan.config import TABLES
from riskplan.domains import Quadratic, make_domain
from riskplan.objectives import UtilityConfig
from riskplan.planners import slp_utility_bound_check, train, train_fresh, zero_plan

pytestmark = pytest.mark.slow

TRAIN_SEED = 1
EVAL_SEED = 99
EPISODES = 5000
RESAMPLES = 4000
DESK = {"navigation": dict(epochs=300, batch=1024), "reservoir": dict(epochs=200, batch=512),
        "hvac": dict(epochs=200, batch=128)}
EXACT_BETA = {"navigation": -1e-3, "reservoir": -1e-3, "hvac": -1e-4}


class Agent:
    def __init__(self, domain, method, beta, kind):
        self.name, self.method, self.beta = domain, method, beta
        self.domain = make_domain(domain)
        table = TABLES[domain]
        start = time.perf_counter()
        self.rep, self.trace = train_fresh(
            method, self.domain, UtilityConfig.for_beta(beta, kind), lr=table["lr"][method], seed=TRAIN_SEED,
            **DESK[domain])  # no overflow guard: flagged epochs are recorded in the trace and judged below
        self.train_seconds = time.perf_counter() - start
        keep = 0 if domain == "reservoir" else None
        self.samples, self.dump = ev.evaluate(self.rep, self.domain, EPISODES, EVAL_SEED, keep_trajectories=keep)
        self.returns = self.samples.returns

    @property
    def variance(self):
        return float(np.var(self.returns))


_CACHE: dict = {}


def agent(domain, method, beta=None, kind="mean-variance"):
    beta = TABLES[domain]["beta"] if beta is None else float(beta)
    key = (domain, method, beta, kind if beta != 0 else "risk-neutral")
    if key not in _CACHE:
        _CACHE[key] = Agent(domain, method, beta, kind)
    return _CACHE[key]


def lower_variance(averse, neutral):
    """Bootstrap verdict for Var(averse) < Var(neutral) and a one-line summary."""
    cmp = ev.compare_variance(averse.returns, neutral.returns, resamples=RESAMPLES, seed=0)
    v = cmp.variance_diff
    text = (f"{averse.method} var {averse.variance:.4g} vs {neutral.variance:.4g}, "
            f"diff CI [{v.low:.3g}, {v.high:.3g}] -> {cmp.verdict}")
    return cmp, text


def test_1_gradient_oracle(acceptance_report):
    start = time.perf_counter()
    result = checks.check_gradient_oracle(instances=50)
    seconds = time.perf_counter() - start
    ok = result.passed and seconds < 60
    acceptance_report("1 gradient oracle", ok, f"{result.detail}; {seconds:.1f}s (limit 60s)")
    assert ok


def test_2_entropic_gaussian(acceptance_report):
    start = time.perf_counter()
    z = np.random.default_rng(2024).standard_normal(10**6)
    exact = obj.exact_entropic_utility(z, -0.1)
    mv = obj.mean_variance_utility(z, -0.1)
    mu, var = z.mean(), z.var()
    # sampling error of mu + (beta/2) var: sd(mu) = 1/sqrt(n), sd(var) = sqrt(2/n)
    tol_mv = 3 * np.sqrt(1 / z.size + (0.05 ** 2) * 2 / z.size)
    seconds = time.perf_counter() - start
    ok = abs(exact + 0.05) <= 0.005 and abs(mv + 0.05) <= tol_mv and abs(mv - (mu - 0.05 * var)) < 1e-12 \
        and seconds < 30
    acceptance_report("2 entropic Gaussian", ok,
                      f"exact {exact:.5f}, mean-variance {mv:.5f} (tolerance {tol_mv:.1e}); {seconds:.1f}s")
    assert ok


def test_3_toy_convergence(acceptance_report):
    d = Quadratic(target=3.0)
    plan, trace = train(zero_plan(d), d, UtilityConfig.for_beta(0.0), epochs=500, batch=1, lr=0.05, seed=0)
    epochs = next((k + 1 for k, u in enumerate(trace.utility) if np.sqrt(-u) <= 1e-3), None)
    err = abs(float(plan.actions[0, 0]) - 3.0)
    ok = err <= 1e-3
    acceptance_report("3 toy convergence", ok, f"|a - 3| = {err:.1e} after 500 epochs "
                                               f"(within 1e-3 from epoch {epochs})")
    assert ok


def _domain_variance_pairs(domain):
    lines, ok = [], True
    for method in ("slp", "drp"):
        cmp, text = lower_variance(agent(domain, method), agent(domain, method, 0.0))
        ok &= cmp.verdict == "a-lower-variance"
        lines.append(text)
    return ok, lines


def test_4_navigation(acceptance_report):
    ok, lines = _domain_variance_pairs("navigation")
    averse, neutral = agent("navigation", "drp"), agent("navigation", "drp", 0.0)
    za = ev.zone_entry_fraction(averse.domain, averse.dump)
    zn = ev.zone_entry_fraction(neutral.domain, neutral.dump)
    zone_ok = za * 2 <= zn and zn > 0
    slowest = max(agent("navigation", m, b).train_seconds for m in ("slp", "drp") for b in (None, 0.0))
    time_ok = slowest < 600
    ok = ok and zone_ok and time_ok
    acceptance_report("4 navigation", ok, "; ".join(lines) + f"; zone entry {za:.3f} vs {zn:.3f}"
                      f"; slowest agent {slowest:.0f}s (target 600s)")
    assert ok


def test_5_reservoir(acceptance_report):
    ok, lines = _domain_variance_pairs("reservoir")
    acceptance_report("5 reservoir", ok, "; ".join(lines))
    averse, neutral = agent("reservoir", "drp"), agent("reservoir", "drp", 0.0)
    cmp = ev.compare_variance(averse.returns, neutral.returns, resamples=RESAMPLES, seed=0)
    m = cmp.mean_diff
    acceptance_report("5 reservoir mean(risk-averse drp) >= mean(drp)", m.estimate >= 0,
                      f"mean {averse.returns.mean():.1f} vs {neutral.returns.mean():.1f}, "
                      f"diff CI [{m.low:.1f}, {m.high:.1f}]", soft=True)
    assert ok


def test_6_hvac(acceptance_report):
    ok, lines = _domain_variance_pairs("hvac")
    averse, neutral = agent("hvac", "drp"), agent("hvac", "drp", 0.0)
    ca = ev.cold_fraction(averse.domain, averse.dump)
    cn = ev.cold_fraction(neutral.domain, neutral.dump)
    ok = ok and ca < cn
    acceptance_report("6 hvac", ok, "; ".join(lines) + f"; cold room-steps {ca:.4f} vs {cn:.4f}")
    assert ok


@pytest.mark.parametrize("domain", ["navigation", "reservoir", "hvac"])
def test_7_bound_proxy(domain, acceptance_report):
    for beta in (TABLES[domain]["beta"], 0.0):
        slp, drp = agent(domain, "slp", beta), agent(domain, "drp", beta)
        report = slp_utility_bound_check(slp.rep, drp.rep, slp.domain, UtilityConfig.for_beta(beta), EVAL_SEED,
                                         EPISODES, resamples=RESAMPLES)
        acceptance_report(f"7 bound proxy {domain} beta={beta:g}", report.holds,
                          f"U_drp - U_slp = {report.difference:.4g}, CI [{report.low:.4g}, {report.high:.4g}], "
                          f"SE {report.std_error:.3g}", soft=True)


def test_8_reservoir_beta_sweep(acceptance_report):
    runs = [agent("reservoir", "drp", b) for b in (0.0, -10.0, -100.0)]
    ok, parts = True, []
    for less, more in zip(runs, runs[1:]):
        cmp, _ = lower_variance(more, less)
        ok &= cmp.verdict != "b-lower-variance"
        parts.append(f"beta {more.beta:g} vs {less.beta:g}: {cmp.verdict}")
    variances = ", ".join(f"{r.beta:g}: {r.variance:.4g}" for r in runs)
    acceptance_report("8 reservoir drp beta sweep", ok, f"variances {variances}; " + "; ".join(parts))
    assert ok


# Reservoir returns reach about -1e6 in the tail of the untrained starting plan or policy, so
# |beta * G| passes 700 on early batches at beta=-1e-3; see the decisions ledger
RESERVOIR_OVERFLOW = pytest.mark.xfail(strict=True, reason="reservoir return tails exceed the entropic safe range")


@pytest.mark.parametrize("domain", ["navigation", pytest.param("reservoir", marks=RESERVOIR_OVERFLOW), "hvac"])
def test_9_exact_entropic(domain, acceptance_report):
    beta = EXACT_BETA[domain]
    averse = agent(domain, "slp", beta, "exact-entropic")
    neutral = agent(domain, "slp", 0.0)
    flagged = int(np.sum(averse.trace.overflow))
    cmp, text = lower_variance(averse, neutral)
    ok = flagged == 0 and len(averse.trace) == DESK[domain]["epochs"] and cmp.verdict != "b-lower-variance"
    acceptance_report(f"9 exact entropic {domain} beta={beta:g}", ok,
                      f"{flagged} of {len(averse.trace)} epochs flagged for overflow; {text}")
    assert ok


def test_10_check_and_reproducibility(tmp_path, acceptance_report):
    start = time.perf_counter()
    results = checks.run_checks()
    seconds = time.perf_counter() - start
    failed = [r.name for r in results if not r.passed]
    check_ok = not failed and seconds < 300

    flags = ["--domain", "reservoir", "--method", "drp", "--epochs", "20", "--batch", "128", "--episodes", "1000",
             "--seed", "3", "--beta", "-100"]
    files = ("params.txt", "returns.csv", "summary.txt", "trajectories.csv")
    runs = []
    for k in range(3):
        out = tmp_path / f"run{k}"
        assert cli.main(["train", *flags, "--output", str(out)]) == 0
        assert cli.main(["eval", *flags, "--output", str(out / "eval"), "--params", str(out / "params.txt")]) == 0
        trace = np.genfromtxt(out / "trace.csv", delimiter=",", names=True)
        numeric = np.stack([trace[c] for c in ("utility", "mean", "variance", "grad_norm")])
        runs.append(([(out / f).read_bytes() if f == "params.txt" else (out / "eval" / f).read_bytes()
                      for f in files], numeric))
    differ = sorted({f for r in runs[1:] for f, x, y in zip(files, runs[0][0], r[0]) if x != y}
                    | ({"trace.csv"} if any(not np.array_equal(runs[0][1], r[1]) for r in runs[1:]) else set()))
    same = not differ
    ok = check_ok and same
    acceptance_report("10 check suite and reproducibility", ok,
                      f"{len(results) - len(failed)}/{len(results)} checks in {seconds:.0f}s (limit 300s)"
                      f"{'; failed ' + ', '.join(failed) if failed else ''}; "
                      f"train+eval bitwise identical across 3 runs: {same}"
                      f"{'; differing ' + ', '.join(differ) if differ else ''}")
    assert ok
