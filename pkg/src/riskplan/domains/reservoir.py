"""Networked reservoirs with exponential rainfall.

Actions are discharge matrices of shape ``(N, N + 1)`` flattened row-major;
entry ``[i, j]`` moves water from reservoir ``i`` to ``j`` and the last
column releases water out of the system.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from .. import rng
from .base import Domain

OUT = "out"
_TINY = 1e-12


def chain(n: int) -> tuple[tuple[int | str, ...], ...]:
    """Linear chain ``0 -> 1 -> ... -> n-1 -> out``."""
    return tuple((i + 1,) for i in range(n - 1)) + ((OUT,),)


@dataclass(frozen=True)
class ReservoirParams:
    n: int = 5
    # downstream targets of each reservoir; OUT leaves the system
    downstream: tuple[tuple[int | str, ...], ...] | None = None
    lower: float | tuple[float, ...] = 20.0
    upper: float | tuple[float, ...] = 80.0
    penalty_low: float = 5.0
    penalty_high: float = 100.0
    rain_rate: float = 0.1
    start: float | tuple[float, ...] = 45.0
    horizon: int = 50

    def __post_init__(self):
        if self.downstream is None:
            object.__setattr__(self, "downstream", chain(self.n))
        if len(self.downstream) != self.n:
            raise ValueError("need one downstream list per reservoir")
        lo, hi = self.bounds()
        if np.any(lo < 0) or np.any(lo >= hi):
            raise ValueError("need 0 <= lower < upper")
        if not self.penalty_high > self.penalty_low > 0:
            raise ValueError("need penalty_high > penalty_low > 0")
        if self.rain_rate <= 0:
            raise ValueError("rain rate must be positive")
        _check_acyclic(self.downstream)

    def bounds(self):
        return (np.broadcast_to(np.asarray(self.lower, float), (self.n,)).copy(),
                np.broadcast_to(np.asarray(self.upper, float), (self.n,)).copy())


def _check_acyclic(downstream):
    n = len(downstream)
    state = [0] * n

    def visit(i):
        if state[i] == 1:
            raise ValueError("reservoir topology has a cycle")
        if state[i] == 2:
            return
        state[i] = 1
        for j in downstream[i]:
            if j != OUT:
                visit(int(j))
        state[i] = 2

    for i in range(n):
        visit(i)


class Reservoir(Domain):
    name = "reservoir"

    def __init__(self, params: ReservoirParams | None = None):
        self.params = p = params or ReservoirParams()
        n = p.n
        self.state_dim = n
        self.action_dim = n * (n + 1)
        self.noise_dim = n
        self.horizon = p.horizon
        self.initial_state = np.broadcast_to(np.asarray(p.start, float), (n,)).copy()
        self.lower, self.upper = p.bounds()
        mask = np.zeros((n, n + 1))
        for i, targets in enumerate(p.downstream):
            for j in targets:
                mask[i, n if j == OUT else int(j)] = 1.0
        self.mask = mask
        self.input_shift = (self.lower + self.upper) / 2
        self.input_scale = (self.upper - self.lower) / 2
        self.validate()

    def with_horizon(self, horizon):
        return Reservoir(dataclasses.replace(self.params, horizon=horizon))

    def downstream(self, i: int):
        return [j for j in range(self.params.n + 1) if self.mask[i, j]]

    def upstream(self, i: int):
        return [j for j in range(self.params.n) if self.mask[j, i]]

    def draw_noise(self, key, shape, offsets):
        return rng.exponential(key, shape, self.params.rain_rate, offsets)

    def _matrix(self, a):
        shape = tuple(np.shape(ad.value_of(a))[:-1]) + (self.params.n, self.params.n + 1)
        return ad.reshape(a, shape)

    def _flat(self, m):
        shape = tuple(np.shape(ad.value_of(m))[:-2]) + (self.action_dim,)
        return ad.reshape(m, shape)

    def step(self, s, a, xi):
        n = self.params.n
        flows = self._matrix(a)
        outflow = ad.sum(flows, axis=-1)
        inflow = ad.sum(flows[..., :n], axis=-2)
        return s - outflow + inflow + xi

    def reward(self, s, a):
        p = self.params
        over = ad.relu(s - self.upper) * p.penalty_high
        under = ad.relu(self.lower - s) * p.penalty_low
        return -ad.sum(over + under, axis=-1)

    def enforce(self, s, a):
        """Mask illegal edges and scale rows down to the available water."""
        flows = self._matrix(a) * self.mask
        total = ad.sum(flows, axis=-1)
        total_v, s_v = np.broadcast_arrays(ad.value_of(total), ad.value_of(s))
        over = total_v > s_v
        # rows with a vanishing total are simply shut; dividing by a subnormal
        # total would overflow the partials even in unselected lanes
        divide = over & (total_v > _TINY)
        safe_total = ad.where(divide, total, 1.0)
        scale = ad.where(divide, s / safe_total, np.where(over, 0.0, 1.0))
        return self._flat(flows * scale[..., None])

    def project_action(self, a, s=None):
        a = np.asarray(a, dtype=float)
        flows = np.maximum(a.reshape(a.shape[:-1] + self.mask.shape), 0.0) * self.mask
        if s is not None:
            total = flows.sum(axis=-1)
            s = np.asarray(s, dtype=float)
            over = total > s
            divide = over & (total > _TINY)
            scale = np.where(divide, s / np.where(divide, total, 1.0), np.where(over, 0.0, 1.0))
            flows = flows * scale[..., None]
        return flows.reshape(a.shape)

    def policy_head(self, z):
        return ad.softplus(z) * self.mask.reshape(-1)

    def initial_plan(self):
        """Steady-state releases: every reservoir passes on its expected inflow.

        The expected inflow is the mean rainfall of the reservoir and of all
        reservoirs draining into it, split evenly over its downstream edges.
        """
        n = self.params.n
        mean_rain = 1.0 / self.params.rain_rate
        inflow = np.full(n, mean_rain)
        release = np.zeros((n, n + 1))
        for i in self._topological_order():
            share = inflow[i] / self.mask[i].sum()
            release[i] = share * self.mask[i]
            for j in np.flatnonzero(self.mask[i, :n]):
                inflow[j] += share
        return np.tile(release.reshape(-1), (self.horizon + 1, 1))

    def initial_policy_bias(self):
        # inverse softplus of the steady-state releases; masked edges stay at 0
        a = self.initial_plan()[0]
        return np.where(a > 0, a + np.log(-np.expm1(-np.where(a > 0, a, 1.0))), 0.0)

    def _topological_order(self):
        order, seen = [], set()

        def visit(i):
            if i in seen:
                return
            seen.add(i)
            for j in self.upstream(i):
                visit(j)
            order.append(i)

        for i in range(self.params.n):
            visit(i)
        return order
