"""Invariant suite behind ``riskplan check``.

Every check is self-contained, seeded and returns a :class:`CheckResult`;
none of them trains a full-size agent.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autodiff as ad
from . import evaluation as ev
from . import objectives
from .domains import (Domain, Hvac, Navigation, Quadratic, Reservoir, ShiftedReward, crossing_length,
                      make_domain, sample_scenario)
from .objectives import UtilityConfig
from .planners import Plan, init_policy, rollout, train

GRADIENT_TOLERANCE = 1e-4
FD_EPS = 1e-5


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


# -- gradient oracle -----------------------------------------------------------

def small_instance(name: str, gen: np.random.Generator, method: str, horizon: int, batch: int):
    """Random small domain, start state and parameter vector for the FD oracle."""
    if name == "navigation":
        domain = make_domain(name, horizon=horizon)
        start = gen.uniform(1.0, 6.0, size=2)
    elif name == "reservoir":
        domain = make_domain(name, n=3, horizon=horizon, rain_rate=0.05)
        start = gen.uniform(5.0, 95.0, size=3)
    elif name == "hvac":
        domain = make_domain(name, n=3, horizon=horizon)
        start = gen.uniform(17.0, 23.0, size=3)
    else:
        raise KeyError(name)
    domain = copy.copy(domain)
    domain.initial_state = start
    if method == "slp":
        rep = Plan(domain.project_action(gen.uniform(0.0, 1.0, (horizon + 1, domain.action_dim))
                                         * _action_scale(domain)))
        if name == "navigation":
            rep = Plan(gen.uniform(-1.0, 1.0, (horizon + 1, 2)))
    else:
        rep = init_policy(domain, int(gen.integers(1 << 30)), widths=(4, 4), output_scale=1.0)
        # nonzero biases keep dead units from parking the next layer exactly on a relu corner
        rep = rep.with_parameters([p if p.ndim == 2 else gen.normal(0.0, 0.5, p.shape) for p in rep.parameters()])
    noise = sample_scenario(domain, batch, int(gen.integers(1 << 30)), "oracle").noise
    return domain, rep, noise


def _action_scale(domain: Domain) -> float:
    if isinstance(domain, Hvac):
        return domain.params.max_air
    if isinstance(domain, Reservoir):
        return 10.0
    return 1.0


def _flat(params):
    return np.concatenate([np.ravel(p) for p in params])


def _unflat(vec, shapes, to_param: Callable):
    out, k = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        out.append(to_param(vec[k:k + size].reshape(shape)))
        k += size
    return out


def utility_builder(domain: Domain, rep, noise, beta: float):
    """``x -> U(returns(x))`` over the representation's flattened parameters."""
    shapes = [np.shape(p) for p in rep.parameters()]

    def build(x):
        if isinstance(x, ad.Tensor):
            params = []
            k = 0
            for shape in shapes:
                size = int(np.prod(shape))
                params.append(ad.reshape(x[k:k + size], shape))
                k += size
            graph = x.graph
        else:
            params = _unflat(np.asarray(x), shapes, lambda v: v)
            graph = None
        returns, _, _ = rollout(domain, rep, params, noise, graph)
        return objectives.mean_variance_utility(returns, beta)

    return build, _flat(rep.parameters())


def _near_kink(build, x, coords, g_fd) -> bool:
    g_fine = ad.fd_gradient(build, x, FD_EPS / 10)
    if np.any(ad.relative_errors(g_fd[coords], g_fine[coords]) > GRADIENT_TOLERANCE):
        return True
    f0 = float(ad.value_of(build(x)))
    for i in coords:
        step = np.zeros_like(x)
        step[i] = FD_EPS
        fwd = (float(ad.value_of(build(x + step))) - f0) / FD_EPS
        bwd = (f0 - float(ad.value_of(build(x - step)))) / FD_EPS
        if abs(fwd - bwd) > GRADIENT_TOLERANCE * max(1.0, abs(fwd)) + 1e-3:
            return True
    return False


def oracle_instance(name: str, method: str, gen: np.random.Generator, beta: float = -1.0,
                    max_tries: int = 20):
    """One gradient comparison; kink-adjacent draws are replaced by fresh ones.

    A coordinate counts as kink-adjacent when central differences at ``eps``
    and ``eps / 10`` disagree, or when the forward and backward one-sided
    slopes do; neither test looks at the AD result.
    """
    for attempt in range(max_tries):
        horizon = int(gen.integers(1, 4))
        batch = int(gen.integers(2, 5))
        domain, rep, noise = small_instance(name, gen, method, horizon, batch)
        build, x = utility_builder(domain, rep, noise, beta)
        g_ad = ad.ad_gradient(build, x)
        g_fd = ad.fd_gradient(build, x, FD_EPS)
        err = ad.relative_errors(g_ad, g_fd)
        bad = np.flatnonzero(err > GRADIENT_TOLERANCE)
        if bad.size == 0:
            return float(err.max()), attempt
        if not _near_kink(build, x, bad, g_fd):
            return float(err.max()), attempt
    raise RuntimeError(f"{name}/{method}: no kink-free instance in {max_tries} draws")


def check_gradient_oracle(instances: int = 50, seed: int = 0) -> CheckResult:
    worst, resampled, count = 0.0, 0, 0
    gen = np.random.default_rng(seed)
    for name in ("navigation", "reservoir", "hvac"):
        for k in range(instances):
            method = "slp" if k % 2 == 0 else "drp"
            err, tries = oracle_instance(name, method, gen)
            worst = max(worst, err)
            resampled += tries
            count += 1
    return CheckResult("gradient oracle", worst <= GRADIENT_TOLERANCE,
                       f"{count} instances, worst relative error {worst:.2e}, {resampled} kink resamples")


# -- autodiff invariants ---------------------------------------------------------

def _composite(x):
    a = ad.tanh(x[0] * x[1]) + ad.exp(-x[2] * x[2])
    b = ad.sqrt(x[3] * x[3] + 1.0) * ad.log(ad.softplus(x[0]) + 1.0)
    c = ad.maximum(x[1], x[2]) - ad.minimum(x[0], x[3]) + ad.relu(x[2]) + ad.absolute(x[3])
    return ad.sum(a * b / (c * c + 1.0)) + (x[0] - x[1]) ** 3


def check_autodiff(seed: int = 1, trials: int = 200) -> CheckResult:
    gen = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = gen.normal(size=4)
        # keep away from relu/abs zeros and min/max ties
        if np.min(np.abs(x)) < 1e-3 or abs(x[1] - x[2]) < 1e-3 or abs(x[0] - x[3]) < 1e-3:
            continue
        worst = max(worst, float(np.max(ad.relative_errors(ad.ad_gradient(_composite, x),
                                                           ad.fd_gradient(_composite, x, FD_EPS)))))
    chain_ok = worst <= GRADIENT_TOLERANCE

    # linearity of backward
    x = gen.normal(size=4)
    alpha, beta = 1.7, -0.3
    f = lambda v: ad.sum(v * v * v)  # noqa: E731
    combo = ad.ad_gradient(lambda v: alpha * _composite(v) + beta * f(v), x)
    parts = alpha * ad.ad_gradient(_composite, x) + beta * ad.ad_gradient(f, x)
    lin_err = float(np.max(np.abs(combo - parts)))
    lin_ok = lin_err <= 1e-12

    # stop-gradient paths contribute nothing
    g = ad.Graph()
    v = g.variable(np.array([0.3, -2.0]))
    out = ad.sum(ad.indicator(v, lambda z: z > 0) * 5.0 + ad.stop_gradient(v * v) * v)
    grad = ad.backward(g, out.id)[v.id]
    sg_ok = np.array_equal(grad, np.array([0.09, 4.0]))

    # determinism
    d1 = ad.ad_gradient(_composite, x)
    d2 = ad.ad_gradient(_composite, x)
    det_ok = np.array_equal(d1, d2)
    ok = chain_ok and lin_ok and sg_ok and det_ok
    return CheckResult("autodiff invariants", ok,
                       f"chain rule {worst:.1e}, linearity {lin_err:.1e}, stop-gradient {sg_ok}, deterministic {det_ok}")


# -- domain invariants -----------------------------------------------------------

def check_reservoir(seed: int = 2, rollouts: int = 10_000, steps: int = 5) -> CheckResult:
    gen = np.random.default_rng(seed)
    domain = make_domain("reservoir")
    n = domain.params.n
    s = gen.uniform(0.0, 100.0, size=(rollouts, n))
    worst_cons, min_state = 0.0, np.inf
    for _ in range(steps):
        raw = gen.uniform(-20.0, 60.0, size=(rollouts, domain.action_dim))
        a = domain.project_action(raw, s)
        xi = gen.exponential(1 / domain.params.rain_rate, size=(rollouts, n))
        s2 = domain.step(s, a, xi)
        external = a.reshape(rollouts, n, n + 1)[:, :, n].sum(axis=1)
        cons = np.abs((s2.sum(1) - s.sum(1)) - (xi.sum(1) - external))
        worst_cons = max(worst_cons, float(cons.max()))
        min_state = min(min_state, float(s2.min()))
        s = s2
    idem = np.max(np.abs(domain.project_action(a, s) - domain.project_action(domain.project_action(a, s), s)))
    ok = min_state >= 0 and worst_cons <= 1e-9 and idem <= 1e-12
    return CheckResult("reservoir nonnegativity and conservation", ok,
                       f"min state {min_state:.3g}, conservation error {worst_cons:.1e}, projection idempotence {idem:.1e}")


def check_navigation(seed: int = 3, trials: int = 2000) -> CheckResult:
    gen = np.random.default_rng(seed)
    domain = make_domain("navigation")
    lo, hi = domain.zone_lo, domain.zone_hi
    s = gen.uniform(0.0, 10.0, size=(trials, 2))
    a = gen.uniform(-4.0, 4.0, size=(trials, 2))
    sym = float(np.max(np.abs(crossing_length(s, a, lo, hi) - crossing_length(s + a, -a, lo, hi))))
    r = domain.reward(s, a)
    sign_ok = bool(np.all(r <= 0)) and float(domain.reward(domain.goal, np.zeros(2))) == 0.0

    # step Jacobian w.r.t. the action is the identity away from the zone
    disjoint = np.asarray(crossing_length(s, a, lo, hi)) == 0
    xi = gen.normal(size=2)
    jac_err = 0.0
    for k in np.flatnonzero(disjoint)[:50]:
        for j in range(2):
            g = ad.ad_gradient(lambda v, k=k, j=j: domain.step(s[k], v, xi)[j], a[k])
            jac_err = max(jac_err, float(np.max(np.abs(g - np.eye(2)[j]))))
    ok = sym <= 1e-9 and sign_ok and jac_err == 0.0
    return CheckResult("navigation crossing symmetry, reward sign, action Jacobian", ok,
                       f"symmetry {sym:.1e}, reward sign {sign_ok}, Jacobian deviation {jac_err:.1e}")


def check_reward_signs(seed: int = 4) -> CheckResult:
    gen = np.random.default_rng(seed)
    res = make_domain("reservoir")
    hv = make_domain("hvac")
    r1 = res.reward(gen.uniform(-50, 150, (1000, res.state_dim)), np.zeros((1000, res.action_dim)))
    r2 = hv.reward(gen.uniform(0, 40, (1000, hv.state_dim)), gen.uniform(0, hv.params.max_air, (1000, hv.action_dim)))
    ok = bool(np.all(np.asarray(r1) <= 0) and np.all(np.asarray(r2) <= 0))
    return CheckResult("reservoir and hvac rewards nonpositive", ok, f"max {max(np.max(r1), np.max(r2)):.3g}")


def check_step_purity(seed: int = 5) -> CheckResult:
    ok = True
    for name in ("navigation", "reservoir", "hvac"):
        d = make_domain(name, horizon=3)
        sc = sample_scenario(d, 8, seed, "purity").noise
        s = np.broadcast_to(d.initial_state, (8, d.state_dim))
        a = d.project_action(np.full((8, d.action_dim), 0.05))
        ok &= np.array_equal(d.step(s, a, sc[:, 0]), d.step(s, a, sc[:, 0]))
        ok &= np.array_equal(sc, sample_scenario(d, 8, seed, "purity").noise)
        ok &= np.array_equal(sc[3:], sample_scenario(d, 5, seed, "purity", first=3).noise)
    return CheckResult("reparameterization purity", bool(ok), "steps and scenario slices reproducible")


# -- objective invariants --------------------------------------------------------

def check_objectives(seed: int = 6) -> CheckResult:
    gen = np.random.default_rng(seed)
    g = gen.normal(2.0, 1.5, size=200)
    mu = float(np.mean(g))
    betas = np.linspace(-2.0, -0.01, 25)
    mv = np.array([objectives.mean_variance_utility(g, b) for b in betas])
    ee = np.array([objectives.exact_entropic_utility(g, b) for b in betas])
    mono = bool(np.all(np.diff(mv) > 0) and np.all(np.diff(ee) > 0))
    order = bool(np.all(mv <= mu) and np.all(ee <= mu))
    c = 17.25
    shift = max(abs(objectives.mean_variance_utility(g + c, -0.7) - objectives.mean_variance_utility(g, -0.7) - c),
                abs(objectives.exact_entropic_utility(g + c, -0.7) - objectives.exact_entropic_utility(g, -0.7) - c))
    small = [1e-2, 1e-3, 1e-4]
    gaps = [abs(objectives.exact_entropic_utility(g, -b) - mu) for b in small]
    # O(beta): error shrinks roughly tenfold per decade
    neutral = all(gaps[k + 1] < 0.2 * gaps[k] for k in range(len(gaps) - 1)) and gaps[-1] < 1e-3
    lse = max(abs(objectives.exact_entropic_utility(g, b) - objectives.naive_entropic_utility(g, b)) for b in betas)
    ok = mono and order and shift <= 1e-9 and neutral and lse <= 1e-9
    return CheckResult("objective invariants", ok,
                       f"monotone {mono}, below mean {order}, translation {shift:.1e}, "
                       f"beta->0 gaps {['%.1e' % x for x in gaps]}, shift agreement {lse:.1e}")


# -- planner invariants ----------------------------------------------------------

def _tiny_train(domain, rep, utility, epochs=5, **kw):
    return train(rep, domain, utility, epochs=epochs, batch=16, lr=0.05, seed=11, **kw)


def check_planner_invariants() -> CheckResult:
    details, ok = [], True
    nav = make_domain("navigation", horizon=5)
    res = make_domain("reservoir", n=3, horizon=4)

    # risk-neutral config equals mean-variance at beta 0
    neutral = UtilityConfig.for_beta(0.0)
    for d in (nav, res):
        p0 = init_policy(d, 3, widths=(8, 8))
        r1, t1 = _tiny_train(d, p0, neutral)
        r2, t2 = _tiny_train(d, p0, neutral, objective=lambda G: objectives.mean_variance_utility(G, 0.0))
        same = np.array_equal(t1.numeric(), t2.numeric())
        ok &= same
    details.append(f"risk-neutral consistency {same}")

    # deterministic in (inputs, seed)
    mv = UtilityConfig.for_beta(-1.0)
    p0 = init_policy(nav, 3, widths=(8, 8))
    ra, ta = _tiny_train(nav, p0, mv)
    rb, tb = _tiny_train(nav, p0, mv)
    det = np.array_equal(ta.numeric(), tb.numeric()) and all(
        np.array_equal(x, y) for x, y in zip(ra.parameters(), rb.parameters()))
    ok &= det
    details.append(f"deterministic {det}")

    # plans stay feasible after every step
    feasible = True
    for d in (nav, res):
        plan = Plan(np.zeros((d.horizon + 1, d.action_dim)))
        for epoch in range(4):
            plan, _ = train(plan, d, mv, epochs=1, batch=8, lr=2.0, seed=epoch)
            a = plan.actions
            feasible &= np.array_equal(d.project_action(a), a)
    ok &= feasible
    details.append(f"SLP feasibility {feasible}")

    # argmax invariance under a constant reward shift
    c = 0.5
    shifted = ShiftedReward(nav, c)
    r1, t1 = _tiny_train(nav, p0, mv)
    r2, t2 = _tiny_train(shifted, p0, mv)
    du = float(np.max(np.abs(np.array(t2.utility) - np.array(t1.utility) - (nav.horizon + 1) * c)))
    dg = float(np.max(np.abs(np.array(t2.grad_norm) - np.array(t1.grad_norm)) / np.array(t1.grad_norm)))
    dp = max(float(np.max(np.abs(x - y))) for x, y in zip(r1.parameters(), r2.parameters()))
    shift_ok = du <= 1e-9 and dg <= 1e-9 and dp <= 1e-9
    ok &= shift_ok
    details.append(f"reward shift: utility {du:.1e}, grad {dg:.1e}, params {dp:.1e}")
    return CheckResult("planner invariants", bool(ok), ", ".join(details))


def check_toy_convergence() -> CheckResult:
    d = Quadratic(target=3.0)
    plan, trace = train(Plan(np.zeros((1, 1))), d, UtilityConfig.for_beta(0.0), epochs=500, batch=1, lr=0.05,
                        seed=0)
    err = abs(float(plan.actions[0, 0]) - 3.0)
    return CheckResult("quadratic toy convergence", err <= 1e-3, f"|a - 3| = {err:.1e} after 500 epochs")


# -- evaluation invariants -------------------------------------------------------

def check_eval_purity() -> CheckResult:
    worst = 0.0
    for name in ("navigation", "reservoir", "hvac"):
        d = make_domain(name, horizon=6)
        pol = init_policy(d, 7, widths=(16, 8))
        noise = sample_scenario(d, 32, 5, "eval").noise
        g = ad.Graph()
        tensors = [g.variable(p) for p in pol.parameters()]
        tape, _, _ = rollout(d, pol, tensors, noise, g)
        before = len(g)
        samples, _ = ev.evaluate(pol, d, 32, 5, keep_trajectories=0)
        worst = max(worst, float(np.max(np.abs(tape.value - samples.returns))))
        assert len(g) == before
    return CheckResult("evaluation purity", worst <= 1e-12, f"tape vs plain rollout {worst:.1e}")


def check_statistics(seed: int = 8) -> CheckResult:
    gen = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        g = gen.normal(gen.uniform(-100, 100), gen.uniform(0.1, 10), size=int(gen.integers(1, 500)))
        st = ev.summarize(g, -1.0)
        m = sum(g) / len(g)
        v = sum((x - m) ** 2 for x in g) / len(g)
        worst = max(worst, abs(st.mean - m) / max(1, abs(m)), abs(st.variance - v) / max(1, v))
        assert st.hist_counts.sum() == len(g)
    return CheckResult("summary statistics", worst <= 1e-12, f"two-pass reference {worst:.1e}")


def check_bootstrap(seed: int = 9, trials: int = 400) -> CheckResult:
    gen = np.random.default_rng(seed)
    same = 0
    for k in range(trials):
        x = gen.gamma(2.0, 1.0, size=400)
        r = ev.compare_variance(x[:200], x[200:], resamples=1000, seed=k)
        same += r.verdict == "indistinguishable"
    rate = same / trials
    return CheckResult("bootstrap sanity", rate >= 0.9, f"indistinguishable in {rate:.0%} of split-sample trials")


CHECKS: list[tuple[str, Callable[..., CheckResult]]] = [
    ("autodiff", check_autodiff),
    ("gradient", check_gradient_oracle),
    ("reservoir", check_reservoir),
    ("navigation", check_navigation),
    ("rewards", check_reward_signs),
    ("purity", check_step_purity),
    ("objectives", check_objectives),
    ("planners", check_planner_invariants),
    ("toy", check_toy_convergence),
    ("eval", check_eval_purity),
    ("statistics", check_statistics),
    ("bootstrap", check_bootstrap),
]


def run_checks(quick: bool = False) -> list[CheckResult]:
    results = []
    for key, fn in CHECKS:
        start = time.perf_counter()
        try:
            if quick and key == "gradient":
                r = fn(instances=6)
            elif quick and key == "reservoir":
                r = fn(rollouts=1000)
            else:
                r = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            r = CheckResult(key, False, f"{type(exc).__name__}: {exc}")
        r.seconds = time.perf_counter() - start
        results.append(r)
    return results
