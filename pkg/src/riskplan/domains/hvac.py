"""Multi-room heating with cubic inter-room heat dispersion."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from .base import Domain


def ring(n: int) -> tuple[tuple[int, int], ...]:
    if n == 1:
        return ()
    if n == 2:
        return ((0, 1),)
    return tuple((i, (i + 1) % n) for i in range(n))


@dataclass(frozen=True)
class HvacParams:
    n: int = 5
    # undirected adjacency as (i, j) pairs
    edges: tuple[tuple[int, int], ...] | None = None
    resistance: float | tuple[float, ...] = 200.0
    outdoor_resistance: float = 10.0
    heater_temp: float = 40.0
    set_temp: float | tuple[float, ...] = 21.0
    low_temp: float = 19.0
    penalty: float = 20.0
    outdoor_temp: float = 6.0
    sigma_outdoor: float = 10.0
    sigma_air: float = 0.5
    sigma_dispersion: float = 0.05
    max_air: float = 0.1
    start: float | tuple[float, ...] = 20.0
    horizon: int = 125

    def __post_init__(self):
        if self.edges is None:
            object.__setattr__(self, "edges", ring(self.n))
        set_temp = np.broadcast_to(np.asarray(self.set_temp, float), (self.n,))
        if not (np.all(self.low_temp < set_temp) and np.all(set_temp < self.heater_temp)):
            raise ValueError("need low_temp < set_temp < heater_temp")
        scales = [self.sigma_outdoor, self.sigma_air, self.sigma_dispersion, self.outdoor_resistance, self.max_air]
        if min(scales) <= 0 or np.any(np.asarray(self.resistance) <= 0):
            raise ValueError("scales and resistances must be positive")
        for i, j in self.edges:
            if i == j or not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"bad edge {(i, j)}")


class Hvac(Domain):
    name = "hvac"

    def __init__(self, params: HvacParams | None = None):
        self.params = p = params or HvacParams()
        n, e = p.n, len(p.edges)
        self.state_dim = n
        self.action_dim = n
        # per step: actuation per room, dispersion per edge, one outdoor draw
        self.noise_dim = n + e + 1
        self.horizon = p.horizon
        self.initial_state = np.broadcast_to(np.asarray(p.start, float), (n,)).copy()
        self.set_temp = np.broadcast_to(np.asarray(p.set_temp, float), (n,)).copy()
        # difference operator: (s @ incidence)[e] = s_j - s_i for edge (i, j)
        incidence = np.zeros((n, e))
        for k, (i, j) in enumerate(p.edges):
            incidence[i, k] = -1.0
            incidence[j, k] = 1.0
        self.incidence = incidence
        self.resistance = np.broadcast_to(np.asarray(p.resistance, float), (e,)).copy()
        self.input_shift = self.set_temp.copy()
        self.input_scale = np.full(n, 5.0)
        self.validate()

    def with_horizon(self, horizon):
        return Hvac(dataclasses.replace(self.params, horizon=horizon))

    def adjacent(self, i: int):
        return sorted({j for a, b in self.params.edges for j in (a, b) if i in (a, b) and j != i})

    def step(self, s, a, xi):
        p = self.params
        n, e = p.n, len(p.edges)
        xi_air = xi[..., :n]
        xi_edge = xi[..., n:n + e]
        xi_out = xi[..., n + e:]
        heating = a * (p.heater_temp - s) + p.sigma_air * xi_air
        if e:
            gap = ad.matmul(s, self.incidence)
            flow = gap ** 3 / self.resistance + p.sigma_dispersion * xi_edge
            # an edge (i, j) warms i by `flow` and cools j by the same amount
            dispersion = ad.matmul(flow, -self.incidence.T)
        else:
            dispersion = 0.0
        outdoor = (p.outdoor_temp + p.sigma_outdoor * xi_out - s) / p.outdoor_resistance
        return s + heating + dispersion + outdoor

    def reward(self, s, a):
        p = self.params
        cold = ad.indicator(s, lambda v: v <= p.low_temp)
        per_room = -ad.absolute(s - self.set_temp) - a - cold * p.penalty
        return ad.sum(per_room, axis=-1)

    def project_action(self, a, s=None):
        return np.clip(np.asarray(a, dtype=float), 0.0, self.params.max_air)

    def policy_head(self, z):
        return ad.minimum(ad.softplus(z), self.params.max_air)

    def initial_policy_bias(self):
        # softplus(0) is above a small max_air, where the clamp would leave no gradient; start mid-range
        half = 0.5 * self.params.max_air
        return np.full(self.action_dim, half + np.log(-np.expm1(-half)))
