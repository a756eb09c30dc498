"""Reparameterized rollouts: trajectories as deterministic functions of noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..domains import Domain, Scenario
from .policy import Plan, PolicyParams


class DivergenceError(FloatingPointError):
    def __init__(self, step: int, what: str = "state"):
        super().__init__(f"non-finite {what} at step {step}")
        self.step = step


@dataclass
class Trajectory:
    states: np.ndarray    # (m, H+1, n)
    actions: np.ndarray   # (m, H+1, action_dim)
    rewards: np.ndarray   # (m, H+1)


def rollout(domain: Domain, representation, params, noise: np.ndarray, graph: ad.Graph | None = None,
            record: bool = False, strict: bool = True):
    """Unroll ``H + 1`` steps for every noise row and sum the rewards.

    ``params`` are the representation's parameters, as tensors of ``graph``
    or as arrays. Returns ``(returns, trajectory, diverged)`` where
    ``diverged`` marks rollouts whose state went non-finite; with ``strict``
    a non-finite state raises :class:`DivergenceError` instead.
    """
    m = noise.shape[0]
    if noise.shape[1:] != (domain.horizon + 1, domain.noise_dim):
        raise ValueError(f"noise shape {noise.shape} does not match domain ({domain.horizon + 1}, {domain.noise_dim})")
    s = np.broadcast_to(domain.initial_state, (m, domain.state_dim)).copy()
    if graph is not None:
        s = graph.constant(s)
    diverged = np.zeros(m, dtype=bool)
    states, actions, rewards = [], [], []
    total = 0.0
    for t in range(domain.horizon + 1):
        a = domain.enforce(s, representation.act(params, t, s, domain))
        r = domain.reward(s, a)
        total = total + r
        if record:
            states.append(ad.value_of(s))
            actions.append(np.broadcast_to(ad.value_of(a), (m, domain.action_dim)))
            rewards.append(np.broadcast_to(ad.value_of(r), (m,)))
        if t < domain.horizon:
            s = domain.step(s, a, noise[:, t, :])
            bad = ~np.all(np.isfinite(ad.value_of(s)), axis=-1)
            if bad.any():
                if strict:
                    raise DivergenceError(t + 1)
                diverged |= bad
    total = total if graph is None else graph.lift(total)
    trajectory = None
    if record:
        trajectory = Trajectory(np.stack(states, 1), np.stack(actions, 1), np.stack(rewards, 1))
    return total, trajectory, diverged


def rollout_slp(plan: Plan, scenario: Scenario, domain: Domain, graph: ad.Graph | None = None, params=None):
    """Returns of a straight-line plan on every rollout of ``scenario``."""
    params = plan.parameters() if params is None else params
    return rollout(domain, plan, params, scenario.noise, graph)[0]


def rollout_drp(policy: PolicyParams, scenario: Scenario, domain: Domain, graph: ad.Graph | None = None, params=None):
    """Returns of a reactive policy; actions are recomputed from each rollout's states."""
    params = policy.parameters() if params is None else params
    return rollout(domain, policy, params, scenario.noise, graph)[0]
