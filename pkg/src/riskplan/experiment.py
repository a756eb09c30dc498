"""File-level train and eval runs driven by an ExperimentConfig."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np

from . import evaluation as ev
from .config import ExperimentConfig
from .domains import Hvac, Navigation
from .planners import train_fresh
from .serialization import dump_params, load_params

log = logging.getLogger(__name__)

CONFIG_FILE = "config.ini"
PARAMS_FILE = "params.txt"
TRACE_FILE = "trace.csv"
RETURNS_FILE = "returns.csv"
TRAJECTORIES_FILE = "trajectories.csv"
SUMMARY_FILE = "summary.txt"


def write_config(cfg: ExperimentConfig, directory: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, CONFIG_FILE)
    with open(path, "w") as fh:
        fh.write(cfg.to_ini())
    return path


def train_from_config(cfg: ExperimentConfig):
    """In-memory training; ``cfg`` must already be resolved."""
    domain = cfg.make_domain()
    rep, trace = train_fresh(
        cfg.method, domain, cfg.utility(), cfg.epochs, cfg.batch, cfg.lr, cfg.seed, widths=cfg.hidden,
        optimizer=cfg.optimizer, clip=cfg.grad_clip, fixed_scenarios=cfg.fixed_scenarios,
        overflow_guard=cfg.entropic_guard and cfg.objective == "exact-entropic",
    )
    return rep, trace, domain


def run_train(cfg: ExperimentConfig) -> dict[str, str]:
    cfg = cfg.resolved()
    write_config(cfg, cfg.output)
    rep, trace, _ = train_from_config(cfg)
    paths = {
        "config": os.path.join(cfg.output, CONFIG_FILE),
        "params": os.path.join(cfg.output, PARAMS_FILE),
        "trace": os.path.join(cfg.output, TRACE_FILE),
    }
    dump_params(paths["params"], rep, cfg.domain, cfg.seed, cfg.config_hash())
    trace.write_csv(paths["trace"])
    return paths


def event_rates(domain, dump: ev.TrajectoryDump) -> dict[str, float]:
    if isinstance(domain, Navigation):
        return {"zone_entry_fraction": ev.zone_entry_fraction(domain, dump)}
    if isinstance(domain, Hvac):
        return {"cold_fraction": ev.cold_fraction(domain, dump)}
    return {}


def summary_text(stats: ev.SummaryStats, config_hash: str, samples: ev.ReturnSamples, extra: dict) -> str:
    lines = [f"config_hash = {config_hash}", f"eval_seed = {samples.seed}", f"episodes = {samples.episodes}",
             f"excluded = {samples.excluded}"]
    lines += stats.lines()
    lines += [f"{k} = {v!r}" for k, v in extra.items()]
    return "\n".join(lines) + "\n"


@dataclass
class EvalResult:
    samples: ev.ReturnSamples
    summary: ev.SummaryStats
    rates: dict[str, float]
    paths: dict[str, str]


def run_eval(cfg: ExperimentConfig, params_path: str, output: str | None = None,
             keep_trajectories: int = 100, eval_seed: int | None = None) -> EvalResult:
    """Evaluate a saved params file under ``cfg``'s domain.

    Event rates use every episode; only the first ``keep_trajectories``
    episodes are written to the trajectories CSV.
    """
    cfg = cfg.resolved()
    rep, header = load_params(params_path, expect_domain=cfg.domain)
    out = output or os.path.dirname(os.path.abspath(params_path))
    write_config(cfg, out)
    domain = cfg.make_domain()
    seed = cfg.seed if eval_seed is None else eval_seed
    samples, dump = ev.evaluate(rep, domain, cfg.episodes, seed)
    stats = ev.summarize(samples, cfg.beta)
    rates = event_rates(domain, dump)
    k = min(keep_trajectories, len(dump.episodes))
    kept = ev.TrajectoryDump(dump.episodes[:k], dump.states[:k], dump.actions[:k], dump.rewards[:k])
    paths = {
        "returns": os.path.join(out, RETURNS_FILE),
        "trajectories": os.path.join(out, TRAJECTORIES_FILE),
        "summary": os.path.join(out, SUMMARY_FILE),
    }
    samples.write_csv(paths["returns"])
    kept.write_csv(paths["trajectories"])
    with open(paths["summary"], "w") as fh:
        fh.write(summary_text(stats, header.config_hash or cfg.config_hash(), samples, rates))
    return EvalResult(samples, stats, rates, paths)


def sweep_table(entries) -> str:
    rows = ["beta,mean,variance,error"]
    for e in entries:
        if e.summary is None:
            rows.append(f"{e.beta!r},,,{e.error}")
        else:
            rows.append(f"{e.beta!r},{e.summary.mean!r},{e.summary.variance!r},")
    return "\n".join(rows) + "\n"


def run_sweep(cfg: ExperimentConfig, betas) -> list[ev.SweepEntry]:
    cfg = cfg.resolved()
    write_config(cfg, cfg.output)
    domain = cfg.make_domain()
    entries = ev.beta_sweep(
        domain, cfg.method, betas, cfg.seed, epochs=cfg.epochs, batch=cfg.batch, lr=cfg.lr,
        episodes=cfg.episodes, kind=cfg.objective, widths=cfg.hidden, optimizer=cfg.optimizer,
        clip=cfg.grad_clip, fixed_scenarios=cfg.fixed_scenarios,
    )
    for e in entries:
        if e.samples is None:
            continue
        d = os.path.join(cfg.output, f"beta_{e.beta:g}")
        os.makedirs(d, exist_ok=True)
        e.samples.write_csv(os.path.join(d, RETURNS_FILE))
        with open(os.path.join(d, SUMMARY_FILE), "w") as fh:
            fh.write(summary_text(e.summary, cfg.config_hash(), e.samples, {}))
    with open(os.path.join(cfg.output, "sweep.csv"), "w") as fh:
        fh.write(sweep_table(entries))
    return entries


def same_returns(a: ev.ReturnSamples, b: ev.ReturnSamples) -> bool:
    return a.returns.shape == b.returns.shape and bool(np.all(a.returns == b.returns))
