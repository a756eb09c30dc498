from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng


@dataclass(frozen=True)
class Scenario:
    """Pre-sampled exogenous noise, shape ``(m, horizon + 1, noise_dim)``."""

    noise: np.ndarray
    seed: int
    stream: str = "default"

    @property
    def batch(self) -> int:
        return self.noise.shape[0]


class Domain:
    """A continuous state-action MDP with a reparameterized transition.

    Subclasses supply ``step(s, a, xi)`` and ``reward(s, a)`` written against
    :mod:`riskplan.autodiff` functions, so the same code runs on tensors
    (recording a graph) and on plain arrays. ``s`` has shape ``(..., n)``
    and ``a`` shape ``(..., action_dim)``; leading axes broadcast.
    """

    name: str = "domain"
    state_dim: int
    action_dim: int
    noise_dim: int
    horizon: int
    initial_state: np.ndarray
    # affine input normalization for policy networks
    input_shift: np.ndarray
    input_scale: np.ndarray

    def validate(self):
        if self.state_dim < 1 or self.action_dim < 1 or self.horizon < 0:
            raise ValueError(f"{self.name}: dimensions must be positive")
        if np.shape(self.initial_state) != (self.state_dim,):
            raise ValueError(f"{self.name}: initial state must have length {self.state_dim}")

    # noise -----------------------------------------------------------------

    def draw_noise(self, key: int, shape: tuple[int, int, int], offsets) -> np.ndarray:
        return rng.standard_normal(key, shape, offsets)

    def step(self, s, a, xi):
        raise NotImplementedError

    def reward(self, s, a):
        raise NotImplementedError

    # action constraints ----------------------------------------------------

    def project_action(self, a: np.ndarray, s: np.ndarray | None = None) -> np.ndarray:
        """Map an action onto the feasible set (idempotent)."""
        raise NotImplementedError

    def enforce(self, s, a):
        """State-dependent constraints applied inside a rollout."""
        return a

    def initial_plan(self) -> np.ndarray:
        """Starting point for open-loop plan optimization, one row per step."""
        return np.zeros((self.horizon + 1, self.action_dim))

    def policy_head(self, z):
        """Squash raw network outputs into actions."""
        raise NotImplementedError

    def initial_policy_bias(self) -> np.ndarray:
        """Output-layer bias that makes an untrained policy act near ``initial_plan()[0]``."""
        return np.zeros(self.action_dim)

    def with_horizon(self, horizon: int) -> "Domain":
        raise NotImplementedError


def sample_scenario(domain: Domain, m: int, seed: int, stream: str = "default", first: int = 0) -> Scenario:
    """Draw noise for rollouts ``first .. first + m - 1``.

    Each entry is keyed by ``(seed, stream, rollout, step, dim)``, so any
    slice of rollouts can be regenerated on its own.
    """
    if m < 1:
        raise ValueError("need at least one rollout")
    key = rng.stream_key(seed, stream)
    shape = (m, domain.horizon + 1, domain.noise_dim)
    noise = domain.draw_noise(key, shape, (first, 0, 0))
    return Scenario(noise, seed, stream)


def zero_scenario(domain: Domain, m: int) -> Scenario:
    return Scenario(np.zeros((m, domain.horizon + 1, domain.noise_dim)), seed=-1, stream="zero")
