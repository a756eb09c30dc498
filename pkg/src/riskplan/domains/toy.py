"""Small analytic domains and wrappers used by checks and tests."""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .base import Domain


class Quadratic(Domain):
    """One decision step, reward ``-(a - target)**2``, no noise.

    The state is a dummy scalar that never changes.
    """

    name = "quadratic"

    def __init__(self, target: float = 3.0, bound: float = 10.0, horizon: int = 0):
        self.target = float(target)
        self.bound = float(bound)
        self.state_dim = 1
        self.action_dim = 1
        self.noise_dim = 1
        self.horizon = horizon
        self.initial_state = np.zeros(1)
        self.input_shift = np.zeros(1)
        self.input_scale = np.ones(1)
        self.validate()

    def step(self, s, a, xi):
        return s + 0.0 * xi[..., :1]

    def reward(self, s, a):
        d = a[..., 0] - self.target
        return -(d * d)

    def project_action(self, a, s=None):
        return np.clip(a, -self.bound, self.bound)

    def policy_head(self, z):
        return self.bound * ad.tanh(z)

    def with_horizon(self, horizon):
        return Quadratic(self.target, self.bound, horizon)


class ShiftedReward(Domain):
    """``inner`` with a constant added to every per-step reward."""

    def __init__(self, inner: Domain, shift: float):
        self.inner = inner
        self.shift = float(shift)
        self.name = f"{inner.name}+{shift:g}"
        for attr in ("state_dim", "action_dim", "noise_dim", "horizon", "initial_state", "input_shift",
                     "input_scale"):
            setattr(self, attr, getattr(inner, attr))

    def draw_noise(self, key, shape, offsets):
        return self.inner.draw_noise(key, shape, offsets)

    def step(self, s, a, xi):
        return self.inner.step(s, a, xi)

    def reward(self, s, a):
        return self.inner.reward(s, a) + self.shift

    def project_action(self, a, s=None):
        return self.inner.project_action(a, s)

    def enforce(self, s, a):
        return self.inner.enforce(s, a)

    def policy_head(self, z):
        return self.inner.policy_head(z)

    def initial_plan(self):
        return self.inner.initial_plan()

    def initial_policy_bias(self):
        return self.inner.initial_policy_bias()

    def with_horizon(self, horizon):
        return ShiftedReward(self.inner.with_horizon(horizon), self.shift)
