"""Two-dimensional navigation through a high-variance zone."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from .base import Domain

# stand-ins for +/- infinity in slab parameters; any value outside [0, 1] works
_BEFORE, _AFTER = -1.0, 2.0


@dataclass(frozen=True)
class NavigationParams:
    goal: tuple[float, float] = (8.0, 9.0)
    goal_radius: float = 0.5
    bound: float = 1.0
    zone_lo: tuple[float, float] = (3.5, 3.5)
    zone_hi: tuple[float, float] = (6.5, 6.5)
    sigma_high: float = 1.0
    sigma_low: float = 0.05
    start: tuple[float, float] = (0.0, 0.0)
    horizon: int = 20

    def __post_init__(self):
        if not all(lo < hi for lo, hi in zip(self.zone_lo, self.zone_hi)):
            raise ValueError("zone needs lo < hi componentwise")
        if not self.sigma_low < self.sigma_high:
            raise ValueError("sigma_low must be below sigma_high")
        if self.bound <= 0:
            raise ValueError("action bound must be positive")


def crossing_length(s, a, zone_lo, zone_hi):
    """Length of the part of segment ``[s, s + a]`` inside a closed box.

    Works on tensors and arrays with trailing coordinate axis. The segment
    is clipped slab by slab; which slab face binds is decided on values, and
    the gradient flows through the binding face only.
    """
    t_enter = 0.0
    t_exit = 1.0
    for k in range(len(zone_lo)):
        sk = s[..., k]
        ak = a[..., k]
        ak_val = ad.value_of(ak)
        sk_val = ad.value_of(sk)
        flat = np.abs(ak_val) < 1e-12
        inside = (zone_lo[k] <= sk_val) & (sk_val <= zone_hi[k])
        flat, inside = np.broadcast_arrays(flat, inside)
        denom = ad.where(flat, 1.0, ak)
        t0 = (zone_lo[k] - sk) / denom
        t1 = (zone_hi[k] - sk) / denom
        near = ad.where(flat, np.where(inside, _BEFORE, _AFTER), ad.minimum(t0, t1))
        far = ad.where(flat, np.where(inside, _AFTER, _BEFORE), ad.maximum(t0, t1))
        t_enter = ad.maximum(near, t_enter)
        t_exit = ad.minimum(far, t_exit)
    return ad.relu(t_exit - t_enter) * ad.norm(a)


class Navigation(Domain):
    name = "navigation"
    state_dim = 2
    action_dim = 2
    noise_dim = 2

    def __init__(self, params: NavigationParams | None = None):
        self.params = params or NavigationParams()
        p = self.params
        self.horizon = p.horizon
        self.initial_state = np.array(p.start, dtype=float)
        self.goal = np.array(p.goal, dtype=float)
        self.zone_lo = np.array(p.zone_lo, dtype=float)
        self.zone_hi = np.array(p.zone_hi, dtype=float)
        self.input_shift = (self.initial_state + self.goal) / 2
        self.input_scale = np.full(2, max(1.0, float(np.max(np.abs(self.goal - self.initial_state))) / 2))
        self.validate()

    def with_horizon(self, horizon):
        return Navigation(dataclasses.replace(self.params, horizon=horizon))

    def crossing(self, s, a):
        return crossing_length(s, a, self.zone_lo, self.zone_hi)

    def step(self, s, a, xi):
        p = self.params
        c = self.crossing(s, a)
        calm = ad.indicator(c, lambda v: v == 0)
        scale = c * p.sigma_high + calm * p.sigma_low
        return s + a + scale[..., None] * xi

    def reward(self, s, a):
        return -ad.norm(s - self.goal)

    def project_action(self, a, s=None):
        b = self.params.bound
        return np.clip(np.asarray(a, dtype=float), -b, b)

    def policy_head(self, z):
        return self.params.bound * ad.tanh(z)
