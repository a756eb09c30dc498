"""Post-training evaluation on fresh scenarios, summaries and comparisons."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from . import objectives
from .domains import Domain, Navigation, Hvac, sample_scenario, zero_scenario
from .planners.rollout import Trajectory, rollout

log = logging.getLogger(__name__)

QUANTILES = (1, 5, 25, 50, 75, 95, 99)


@dataclass
class ReturnSamples:
    returns: np.ndarray
    seed: int
    episodes: int
    excluded: int = 0

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["episode", "return"])
            for k, g in enumerate(self.returns):
                w.writerow([k, repr(float(g))])

    @classmethod
    def read_csv(cls, path) -> "ReturnSamples":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        returns = np.array([float(r["return"]) for r in rows])
        return cls(returns, seed=-1, episodes=len(returns))


@dataclass
class TrajectoryDump:
    episodes: np.ndarray  # global episode index of each kept row
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray

    def write_csv(self, path):
        n = self.states.shape[-1]
        k = self.actions.shape[-1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["episode", "t", *(f"s_{i}" for i in range(n)), *(f"a_{i}" for i in range(k)), "reward"])
            for e, ep in enumerate(self.episodes):
                for t in range(self.states.shape[1]):
                    w.writerow([int(ep), t, *map(repr, self.states[e, t].tolist()),
                                *map(repr, self.actions[e, t].tolist()), repr(float(self.rewards[e, t]))])


def evaluate(representation, domain: Domain, n_episodes: int, seed: int, zero_noise: bool = False,
             keep_trajectories: int | None = None, chunk: int = 2048, stream: str = "eval"):
    """Roll a trained plan or policy out on ``n_episodes`` fresh scenarios.

    Plain numeric rollout, no tape. Episodes whose state goes non-finite are
    dropped from the returns and counted in ``excluded``. Trajectories are
    kept for the first ``keep_trajectories`` episodes (all when ``None``).
    """
    if n_episodes < 1:
        raise ValueError("need at least one episode")
    params = representation.parameters()
    keep = n_episodes if keep_trajectories is None else min(keep_trajectories, n_episodes)
    returns, good, traj_parts = [], [], []
    for first in range(0, n_episodes, chunk):
        m = min(chunk, n_episodes - first)
        if zero_noise:
            scenario = zero_scenario(domain, m)
        else:
            scenario = sample_scenario(domain, m, seed, stream, first=first)
        record = first < keep
        g, traj, diverged = rollout(domain, representation, params, scenario.noise, record=record, strict=False)
        g = np.broadcast_to(g, (m,))
        ok = ~diverged & np.isfinite(g)
        returns.append(g)
        good.append(ok)
        if record:
            take = min(m, keep - first)
            traj_parts.append(Trajectory(traj.states[:take], traj.actions[:take], traj.rewards[:take]))
    returns = np.concatenate(returns)
    good = np.concatenate(good)
    excluded = int((~good).sum())
    if excluded:
        log.warning("%d of %d episodes diverged and were excluded", excluded, n_episodes)
    dump = TrajectoryDump(
        np.arange(keep),
        np.concatenate([p.states for p in traj_parts]) if traj_parts else np.zeros((0, domain.horizon + 1, domain.state_dim)),
        np.concatenate([p.actions for p in traj_parts]) if traj_parts else np.zeros((0, domain.horizon + 1, domain.action_dim)),
        np.concatenate([p.rewards for p in traj_parts]) if traj_parts else np.zeros((0, domain.horizon + 1)),
    )
    samples = ReturnSamples(returns[good].copy(), seed, n_episodes, excluded)
    return samples, dump


# -- domain-specific event rates ---------------------------------------------

def zone_entry_fraction(domain: Navigation, dump: TrajectoryDump) -> float:
    """Fraction of episodes in which any step's segment touches the zone."""
    s, a = dump.states[:, :-1], dump.actions[:, :-1]
    crossing = np.asarray(domain.crossing(s, a))
    return float(np.mean(np.any(crossing > 0, axis=1)))


def cold_fraction(domain: Hvac, dump: TrajectoryDump) -> float:
    """Fraction of room-steps at or below the low-temperature threshold."""
    return float(np.mean(dump.states <= domain.params.low_temp))


# -- summaries ---------------------------------------------------------------

@dataclass
class SummaryStats:
    count: int
    mean: float
    variance: float
    std: float
    min: float
    max: float
    quantiles: dict[int, float]
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    beta: float
    mean_variance_utility: float
    entropic_utility: float

    def lines(self) -> list[str]:
        out = [
            f"count = {self.count}",
            f"mean = {self.mean!r}",
            f"variance = {self.variance!r}",
            f"std = {self.std!r}",
            f"min = {self.min!r}",
            f"max = {self.max!r}",
        ]
        out += [f"q{q:02d} = {v!r}" for q, v in self.quantiles.items()]
        out += [
            f"beta = {self.beta!r}",
            f"mean_variance_utility = {self.mean_variance_utility!r}",
            f"entropic_utility = {self.entropic_utility!r}",
            "hist_edges = " + " ".join(repr(float(e)) for e in self.hist_edges),
            "hist_counts = " + " ".join(str(int(c)) for c in self.hist_counts),
        ]
        return out


def _bin_count(g: np.ndarray, lo: int = 10, hi: int = 200) -> int:
    # Freedman-Diaconis, clamped; a near-zero IQR would otherwise ask for billions of bins
    iqr = np.subtract(*np.quantile(g, [0.75, 0.25]))
    span = float(g.max() - g.min())
    if iqr <= 0 or span <= 0:
        return lo
    width = 2 * iqr / g.size ** (1 / 3)
    return int(np.clip(np.ceil(span / width), lo, hi))


def summarize(samples: ReturnSamples | np.ndarray, beta: float) -> SummaryStats:
    g = np.asarray(samples.returns if isinstance(samples, ReturnSamples) else samples, dtype=float)
    if g.size == 0:
        raise ValueError("no samples to summarize")
    mu, var = (float(x) for x in objectives.sufficient_stats(g))
    counts, edges = np.histogram(g, bins=_bin_count(g))
    mv = float(objectives.mean_variance_utility(g, beta))
    ent = mu if beta == 0 else float(objectives.exact_entropic_utility(g, beta))
    return SummaryStats(
        count=int(g.size), mean=mu, variance=var, std=float(np.sqrt(var)),
        min=float(g.min()), max=float(g.max()),
        quantiles={q: float(np.quantile(g, q / 100)) for q in QUANTILES},
        hist_edges=edges, hist_counts=counts, beta=beta,
        mean_variance_utility=mv, entropic_utility=ent,
    )


# -- bootstrap comparisons ---------------------------------------------------

@dataclass
class Interval:
    estimate: float
    low: float
    high: float
    std_error: float


@dataclass
class VarianceComparison:
    variance_diff: Interval
    mean_diff: Interval
    confidence: float
    resamples: int
    verdict: str

    def lines(self) -> list[str]:
        v, m = self.variance_diff, self.mean_diff
        return [
            f"verdict = {self.verdict}",
            f"confidence = {self.confidence!r}",
            f"resamples = {self.resamples}",
            f"variance_diff = {v.estimate!r}",
            f"variance_diff_ci = {v.low!r} {v.high!r}",
            f"mean_diff = {m.estimate!r}",
            f"mean_diff_ci = {m.low!r} {m.high!r}",
        ]


def _interval(estimate, draws, confidence):
    alpha = (1 - confidence) / 2
    low, high = np.quantile(draws, [alpha, 1 - alpha])
    return Interval(float(estimate), float(low), float(high), float(np.std(draws)))


def compare_variance(a, b, resamples: int = 10_000, confidence: float = 0.95, seed: int = 0) -> VarianceComparison:
    """Percentile-bootstrap intervals for Var(a) - Var(b) and Mean(a) - Mean(b).

    Verdict is ``"a-lower-variance"`` when the whole variance interval is
    below zero, ``"b-lower-variance"`` when above, else ``"indistinguishable"``.
    """
    a = np.asarray(a.returns if isinstance(a, ReturnSamples) else a, dtype=float)
    b = np.asarray(b.returns if isinstance(b, ReturnSamples) else b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    var_diff, mean_diff = _bootstrap_diffs(a, b, resamples, np.random.default_rng(seed))
    vi = _interval(np.var(a) - np.var(b), var_diff, confidence)
    mi = _interval(np.mean(a) - np.mean(b), mean_diff, confidence)
    if vi.high < 0:
        verdict = "a-lower-variance"
    elif vi.low > 0:
        verdict = "b-lower-variance"
    else:
        verdict = "indistinguishable"
    return VarianceComparison(vi, mi, confidence, resamples, verdict)


def _bootstrap_diffs(a, b, resamples, gen, block: int = 256):
    # both statistics come from the same resampled pairs
    var_diff = np.empty(resamples)
    mean_diff = np.empty(resamples)
    for k in range(0, resamples, block):
        n = min(block, resamples - k)
        xa = a[gen.integers(0, a.size, size=(n, a.size))]
        xb = b[gen.integers(0, b.size, size=(n, b.size))]
        var_diff[k:k + n] = np.var(xa, axis=1) - np.var(xb, axis=1)
        mean_diff[k:k + n] = np.mean(xa, axis=1) - np.mean(xb, axis=1)
    return var_diff, mean_diff


# -- risk-aversion sweep -----------------------------------------------------

@dataclass
class SweepEntry:
    beta: float
    samples: ReturnSamples | None = None
    summary: SummaryStats | None = None
    error: str | None = None


def beta_sweep(domain: Domain, method: str, betas, seed: int, *, epochs: int, batch: int, lr: float,
               episodes: int, kind: str = "mean-variance", eval_seed: int | None = None, **train_kwargs):
    """Train and evaluate one agent per beta with a shared seed and settings.

    ``betas`` must be in descending order. A training failure at one beta is
    recorded in that entry and the sweep moves on.
    """
    from .planners import TrainingError, train_fresh

    betas = [float(b) for b in betas]
    if any(x < y for x, y in zip(betas, betas[1:])):
        raise ValueError("beta list must be sorted in descending order")
    eval_seed = seed if eval_seed is None else eval_seed
    out = []
    for beta in betas:
        config = objectives.UtilityConfig.for_beta(beta, kind)
        try:
            rep, _ = train_fresh(method, domain, config, epochs, batch, lr, seed, **train_kwargs)
        except TrainingError as exc:
            log.warning("beta %g: %s", beta, exc)
            out.append(SweepEntry(beta, error=str(exc)))
            continue
        samples, _ = evaluate(rep, domain, episodes, eval_seed, keep_trajectories=0)
        out.append(SweepEntry(beta, samples, summarize(samples, beta)))
    return out
