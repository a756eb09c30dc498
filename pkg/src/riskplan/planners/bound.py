"""Empirical check that a reactive policy does no worse than a fixed plan."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domains import Domain
from ..objectives import UtilityConfig, UtilityKind


@dataclass
class BoundReport:
    utility_slp: float
    utility_drp: float
    difference: float
    low: float
    high: float
    std_error: float
    paired: bool

    @property
    def holds(self) -> bool:
        """Soft criterion: DRP utility is no more than one standard error below SLP."""
        return self.difference >= -self.std_error

    def lines(self) -> list[str]:
        return [
            f"utility_slp = {self.utility_slp!r}",
            f"utility_drp = {self.utility_drp!r}",
            f"difference = {self.difference!r}",
            f"difference_ci = {self.low!r} {self.high!r}",
            f"std_error = {self.std_error!r}",
            f"paired = {str(self.paired).lower()}",
            f"holds = {str(self.holds).lower()}",
        ]


def sample_utility(returns: np.ndarray, config: UtilityConfig, axis: int = -1) -> np.ndarray:
    """Plain-array utility along ``axis``; used on bootstrap resample matrices."""
    g = np.asarray(returns, dtype=float)
    mu = g.mean(axis=axis)
    if config.kind is UtilityKind.RISK_NEUTRAL:
        return mu
    if config.kind is UtilityKind.MEAN_VARIANCE:
        return mu + 0.5 * config.beta * g.var(axis=axis)
    z = config.beta * g
    top = z.max(axis=axis, keepdims=True)
    return (np.squeeze(top, axis) + np.log(np.mean(np.exp(z - top), axis=axis))) / config.beta


def slp_utility_bound_check(slp, drp, domain: Domain, utility: UtilityConfig, seed: int, n: int,
                            resamples: int = 2000, confidence: float = 0.95) -> BoundReport:
    """Estimate U(DRP) - U(SLP) on ``n`` shared evaluation scenarios.

    Both agents see the same noise, so the bootstrap resamples episode pairs
    unless divergent episodes had to be dropped from either side.
    """
    from ..evaluation import evaluate

    a, _ = evaluate(slp, domain, n, seed, keep_trajectories=0)
    b, _ = evaluate(drp, domain, n, seed, keep_trajectories=0)
    gen = np.random.default_rng(seed)
    paired = a.excluded == 0 and b.excluded == 0
    ua, ub = float(sample_utility(a.returns, utility)), float(sample_utility(b.returns, utility))
    draws = np.empty(resamples)
    block = 256
    for k in range(0, resamples, block):
        m = min(block, resamples - k)
        ia = gen.integers(0, a.returns.size, size=(m, a.returns.size))
        ib = ia if paired else gen.integers(0, b.returns.size, size=(m, b.returns.size))
        draws[k:k + m] = sample_utility(b.returns[ib], utility) - sample_utility(a.returns[ia], utility)
    alpha = (1 - confidence) / 2
    low, high = np.quantile(draws, [alpha, 1 - alpha])
    return BoundReport(ua, ub, ub - ua, float(low), float(high), float(np.std(draws)), paired)
