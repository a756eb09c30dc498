from __future__ import annotations

import dataclasses

from .base import Domain, Scenario, sample_scenario, zero_scenario
from .hvac import Hvac, HvacParams
from .navigation import Navigation, NavigationParams, crossing_length
from .reservoir import OUT, Reservoir, ReservoirParams
from .toy import Quadratic, ShiftedReward

DOMAINS = {
    "navigation": (Navigation, NavigationParams),
    "reservoir": (Reservoir, ReservoirParams),
    "hvac": (Hvac, HvacParams),
}


def make_domain(name: str, **overrides) -> Domain:
    """Build a domain by name, overriding any of its parameter fields."""
    try:
        cls, params_cls = DOMAINS[name]
    except KeyError:
        raise KeyError(f"unknown domain {name!r}; choose from {sorted(DOMAINS)}") from None
    known = {f.name for f in dataclasses.fields(params_cls)}
    unknown = set(overrides) - known
    if unknown:
        raise KeyError(f"unknown {name} parameters: {sorted(unknown)}")
    return cls(params_cls(**overrides))


__all__ = [
    "DOMAINS", "OUT", "Domain", "Hvac", "HvacParams", "Navigation", "NavigationParams",
    "Quadratic", "Reservoir", "ReservoirParams", "Scenario", "ShiftedReward", "crossing_length", "make_domain",
    "sample_scenario", "zero_scenario",
]
