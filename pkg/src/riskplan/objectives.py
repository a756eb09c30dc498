"""Risk objectives over a batch of rollout returns.

All functions accept a 1-d batch of returns as a :class:`~riskplan.autodiff.Tensor`
(recording nodes for backpropagation) or as a plain array.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad

OVERFLOW_EXPONENT = 700.0


class UtilityKind(str, enum.Enum):
    RISK_NEUTRAL = "risk-neutral"
    MEAN_VARIANCE = "mean-variance"
    EXACT_ENTROPIC = "exact-entropic"


@dataclass(frozen=True)
class UtilityConfig:
    kind: UtilityKind = UtilityKind.MEAN_VARIANCE
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", UtilityKind(self.kind))
        if self.kind is not UtilityKind.RISK_NEUTRAL and self.beta == 0:
            raise ValueError(f"{self.kind.value} utility needs beta != 0; use risk-neutral")

    @classmethod
    def for_beta(cls, beta: float, kind: str | UtilityKind = UtilityKind.MEAN_VARIANCE) -> "UtilityConfig":
        """Risk-neutral when ``beta == 0``, else the given kind."""
        if beta == 0:
            return cls(UtilityKind.RISK_NEUTRAL, 0.0)
        return cls(UtilityKind(kind), float(beta))


def sufficient_stats(returns):
    """Sample mean and population variance (1/m normalizer)."""
    mu = ad.mean(returns)
    centered = returns - mu
    return mu, ad.mean(centered * centered)


def risk_neutral_value(returns):
    return ad.mean(returns)


def mean_variance_utility(returns, beta: float):
    """``mean + beta/2 * variance``."""
    mu, var = sufficient_stats(returns)
    if beta == 0:
        return mu
    return mu + (beta / 2.0) * var


def exact_entropic_utility(returns, beta: float, diagnostics: dict | None = None):
    """``(1/beta) log mean exp(beta * G)`` evaluated with a log-sum-exp shift.

    The shift is a constant, so the gradient is the same softmax-weighted
    mean it would be without it. When ``diagnostics`` is given, its
    ``"overflow"`` entry is set if the unshifted exponent would exceed 700.
    """
    if beta == 0:
        raise ValueError("exact entropic utility needs beta != 0; use risk-neutral")
    values = ad.value_of(returns)
    scaled = beta * values
    peak = float(np.max(scaled))
    if diagnostics is not None:
        diagnostics["overflow"] = bool(np.max(np.abs(scaled)) > OVERFLOW_EXPONENT)
        diagnostics["max_exponent"] = float(np.max(np.abs(scaled)))
    shift = peak / beta
    inner = ad.mean(ad.exp((returns - shift) * beta))
    return shift + ad.log(inner) / beta


def naive_entropic_utility(returns: np.ndarray, beta: float) -> float:
    """Unshifted formula; overflows for large ``|beta * G|``."""
    returns = np.asarray(returns, dtype=float)
    return float(np.log(np.mean(np.exp(beta * returns))) / beta)


def utility(returns, config: UtilityConfig, diagnostics: dict | None = None):
    if config.kind is UtilityKind.RISK_NEUTRAL:
        return risk_neutral_value(returns)
    if config.kind is UtilityKind.MEAN_VARIANCE:
        return mean_variance_utility(returns, config.beta)
    return exact_entropic_utility(returns, config.beta, diagnostics)
