from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import autodiff as ad
from .. import objectives
from ..domains import Domain, sample_scenario
from ..objectives import UtilityConfig
from .optim import OPTIMIZERS, clip_by_global_norm
from .rollout import DivergenceError, rollout

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    def __init__(self, epoch: int, detail: str):
        super().__init__(f"epoch {epoch}: {detail}")
        self.epoch = epoch


@dataclass
class TrainTrace:
    utility: list[float] = field(default_factory=list)
    mean: list[float] = field(default_factory=list)
    variance: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    wall_time: list[float] = field(default_factory=list)
    overflow: list[bool] = field(default_factory=list)

    COLUMNS = ("epoch", "utility", "mean", "variance", "grad_norm", "wall_time", "overflow")

    def __len__(self):
        return len(self.utility)

    def numeric(self) -> np.ndarray:
        """Trace without wall-clock time, for reproducibility comparisons."""
        return np.array([self.utility, self.mean, self.variance, self.grad_norm], dtype=float)

    def rows(self):
        for k in range(len(self)):
            yield (k, self.utility[k], self.mean[k], self.variance[k], self.grad_norm[k],
                   self.wall_time[k], int(self.overflow[k]))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def train_stream(epoch: int, fixed: bool) -> str:
    return "train/0" if fixed else f"train/{epoch}"


def train(representation, domain: Domain, utility: UtilityConfig, epochs: int, batch: int, lr: float,
          seed: int, optimizer: str = "rmsprop", clip: float | None = 10.0, fixed_scenarios: bool = False,
          objective: Callable | None = None, callback: Callable | None = None, overflow_guard: bool = False):
    """Gradient ascent on the sample utility of reparameterized rollouts.

    Every epoch draws a fresh scenario batch (or reuses one with
    ``fixed_scenarios``), differentiates the utility through the rollout and
    takes one optimizer step; plans are projected back onto the action
    bounds afterwards. ``objective`` replaces the utility built from
    ``utility`` when given. With ``overflow_guard`` an exact-entropic
    overflow diagnostic aborts training instead of being recorded only.
    Returns the trained representation and its trace.
    """
    opt = OPTIMIZERS[optimizer](lr=lr)
    params = [np.array(p, dtype=float) for p in representation.parameters()]
    trace = TrainTrace()
    start = time.perf_counter()
    for epoch in range(epochs):
        scenario = sample_scenario(domain, batch, seed, train_stream(epoch, fixed_scenarios))
        graph = ad.Graph()
        tensors = [graph.variable(p) for p in params]
        try:
            returns, _, _ = rollout(domain, representation, tensors, scenario.noise, graph)
        except DivergenceError as exc:
            raise TrainingError(epoch, f"rollout diverged at step {exc.step}") from exc
        mu, var = objectives.sufficient_stats(returns)
        diagnostics: dict = {}
        if objective is None:
            u = objectives.utility(returns, utility, diagnostics)
        else:
            u = objective(returns)
        grads_map = ad.backward(graph, u.id)
        grads = [grads_map[t.id] for t in tensors]
        if not np.isfinite(u.value) or not all(np.all(np.isfinite(g)) for g in grads):
            raise TrainingError(epoch, f"non-finite utility or gradient (utility={float(u.value)!r}, "
                                       f"max exponent={diagnostics.get('max_exponent')})")
        if overflow_guard and diagnostics.get("overflow"):
            raise TrainingError(epoch, f"entropic exponent {diagnostics['max_exponent']:.1f} exceeds the safe range")
        grads, norm = clip_by_global_norm(grads, clip)
        trace.utility.append(float(u.value))
        trace.mean.append(float(mu.value))
        trace.variance.append(float(var.value))
        trace.grad_norm.append(norm)
        trace.wall_time.append(time.perf_counter() - start)
        trace.overflow.append(bool(diagnostics.get("overflow", False)))
        params = opt.step(params, grads)
        if representation.kind == "slp":
            params = [domain.project_action(params[0])]
        if callback is not None:
            callback(epoch, trace)
        if epoch % 50 == 0:
            log.info("epoch %d utility %.4f mean %.4f var %.4f", epoch, trace.utility[-1], trace.mean[-1],
                     trace.variance[-1])
    return representation.with_parameters(params), trace


def train_fresh(method: str, domain: Domain, utility: UtilityConfig, epochs: int, batch: int, lr: float,
                seed: int, widths=None, **kwargs):
    """Initialize a plan (``"slp"``) or policy (``"drp"``) from ``seed`` and train it."""
    from .policy import DEFAULT_WIDTHS, init_policy, initial_plan

    if method == "slp":
        rep = initial_plan(domain)
    elif method == "drp":
        rep = init_policy(domain, seed, DEFAULT_WIDTHS if widths is None else tuple(widths))
    else:
        raise ValueError(f"unknown method {method!r}")
    return train(rep, domain, utility, epochs, batch, lr, seed, **kwargs)
