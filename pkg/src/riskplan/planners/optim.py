"""Gradient-ascent optimizers over lists of parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RMSProp:
    lr: float
    decay: float = 0.9
    eps: float = 1e-8
    second: list[np.ndarray] = field(default_factory=list)
    steps: int = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        """One ascent step; returns new arrays and leaves inputs untouched."""
        if not self.second:
            self.second = [np.zeros_like(p) for p in params]
        out = []
        for k, (p, g) in enumerate(zip(params, grads)):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
            v = self.decay * self.second[k] + (1 - self.decay) * g * g
            self.second[k] = v
            out.append(p + self.lr * g / (np.sqrt(v) + self.eps))
        self.steps += 1
        return out


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    first: list[np.ndarray] = field(default_factory=list)
    second: list[np.ndarray] = field(default_factory=list)
    steps: int = 0

    def step(self, params, grads):
        if not self.first:
            self.first = [np.zeros_like(p) for p in params]
            self.second = [np.zeros_like(p) for p in params]
        self.steps += 1
        c1 = 1 - self.beta1 ** self.steps
        c2 = 1 - self.beta2 ** self.steps
        out = []
        for k, (p, g) in enumerate(zip(params, grads)):
            self.first[k] = self.beta1 * self.first[k] + (1 - self.beta1) * g
            self.second[k] = self.beta2 * self.second[k] + (1 - self.beta2) * g * g
            out.append(p + self.lr * (self.first[k] / c1) / (np.sqrt(self.second[k] / c2) + self.eps))
        return out


OPTIMIZERS = {"rmsprop": RMSProp, "adam": Adam}


def rmsprop_step(params, grads, state: RMSProp):
    return state.step(params, grads)


def global_norm(grads) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_by_global_norm(grads, max_norm: float | None):
    norm = global_norm(grads)
    if max_norm is None or norm <= max_norm:
        return list(grads), norm
    return [g * (max_norm / norm) for g in grads], norm
