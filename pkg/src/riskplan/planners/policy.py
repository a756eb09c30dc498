"""Decision representations: open-loop plans and reactive MLP policies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from .. import rng
from ..domains import Domain

DEFAULT_WIDTHS = (256, 128, 64, 32)


@dataclass
class Plan:
    """Straight-line plan: one action row per step, shared by all rollouts."""

    actions: np.ndarray
    kind = "slp"

    def parameters(self) -> list[np.ndarray]:
        return [self.actions]

    def with_parameters(self, params: list[np.ndarray]) -> "Plan":
        (actions,) = params
        return Plan(np.array(actions, dtype=float))

    @staticmethod
    def act(params, t: int, s, domain: Domain):
        return params[0][t]

    def project(self, domain: Domain) -> "Plan":
        return Plan(domain.project_action(self.actions))


@dataclass
class PolicyParams:
    """Dense ReLU network mapping normalized states to raw action logits."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"
    kind = "drp"

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(w.shape[1] for w in self.weights[:-1])

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_parameters(self, params: list[np.ndarray]) -> "PolicyParams":
        params = [np.array(p, dtype=float) for p in params]
        return PolicyParams(params[0::2], params[1::2], self.activation)

    def act(self, params, t: int, s, domain: Domain):
        return mlp_forward(params, s, domain, self.activation)


_ACTIVATIONS = {"relu": ad.relu, "tanh": ad.tanh, "softplus": ad.softplus}


def mlp_forward(params, s, domain: Domain, activation: str = "relu"):
    """Forward pass; ``params`` alternates weights and biases."""
    act = _ACTIVATIONS[activation]
    h = (s - domain.input_shift) / domain.input_scale
    layers = len(params) // 2
    for k in range(layers):
        h = ad.matmul(h, params[2 * k]) + params[2 * k + 1]
        if k < layers - 1:
            h = act(h)
    return domain.policy_head(h)


def zero_plan(domain: Domain) -> Plan:
    return Plan(np.zeros((domain.horizon + 1, domain.action_dim)))


def initial_plan(domain: Domain) -> Plan:
    """The domain's preferred starting plan (all zeros unless it says otherwise)."""
    return Plan(domain.project_action(domain.initial_plan()))


def init_policy(domain: Domain, seed: int, widths=DEFAULT_WIDTHS, activation: str = "relu",
                output_scale: float = 0.01) -> PolicyParams:
    """He-style uniform fan-in initialization.

    Hidden biases are zero. The output layer is shrunk by ``output_scale``
    and its bias is the domain's ``initial_policy_bias``, so the untrained
    policy acts near the domain's starting plan instead of a saturated corner.
    """
    sizes = [domain.state_dim, *widths, domain.action_dim]
    weights, biases = [], []
    for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = np.sqrt(6.0 / fan_in)
        u = rng.uniform(rng.stream_key(seed, "weights-init", k), (fan_in, fan_out))
        if k == len(sizes) - 2:
            limit *= output_scale
        weights.append((2.0 * u - 1.0) * limit)
        biases.append(np.zeros(fan_out))
    biases[-1] = np.asarray(domain.initial_policy_bias(), dtype=float).copy()
    return PolicyParams(weights, biases, activation)
