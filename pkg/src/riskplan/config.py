"""Experiment configuration: per-domain defaults, INI round trip, hashing."""

from __future__ import annotations

import ast
import configparser
import dataclasses
import hashlib
import io
import os
from dataclasses import dataclass, field

from .domains import DOMAINS
from .objectives import UtilityConfig, UtilityKind

OUTPUT_ROOT_ENV = "RISKPLAN_OUTPUT_ROOT"
METHODS = ("slp", "drp")

# learning rate per method, then shared settings; beta is the risk-averse value
TABLES = {
    "navigation": dict(lr={"slp": 0.5, "drp": 2.5e-4}, epochs=1001, batch=8192, beta=-1000.0, horizon=20),
    "reservoir": dict(lr={"slp": 0.2, "drp": 5e-3}, epochs=501, batch=1024, beta=-100.0, horizon=50),
    "hvac": dict(lr={"slp": 5e-3, "drp": 5e-3}, epochs=501, batch=128, beta=-40.0, horizon=125),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    domain: str = "navigation"
    method: str = "slp"
    objective: str = UtilityKind.MEAN_VARIANCE.value
    beta: float | None = None
    epochs: int | None = None
    batch: int | None = None
    lr: float | None = None
    horizon: int | None = None
    hidden: tuple[int, ...] = (256, 128, 64, 32)
    seed: int = 0
    episodes: int = 10_000
    output: str | None = None
    fixed_scenarios: bool = False
    optimizer: str = "rmsprop"
    grad_clip: float | None = 10.0
    entropic_guard: bool = True
    domain_params: dict = field(default_factory=dict)

    def resolved(self) -> "ExperimentConfig":
        """Fill unset fields from the domain's hyperparameter table."""
        if self.domain not in TABLES:
            raise ConfigError(f"unknown domain {self.domain!r}; choose from {sorted(TABLES)}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {list(METHODS)}")
        try:
            UtilityKind(self.objective)
        except ValueError:
            raise ConfigError(f"unknown objective {self.objective!r}") from None
        table = TABLES[self.domain]
        cfg = dataclasses.replace(
            self,
            beta=table["beta"] if self.beta is None else float(self.beta),
            epochs=table["epochs"] if self.epochs is None else int(self.epochs),
            batch=table["batch"] if self.batch is None else int(self.batch),
            lr=table["lr"][self.method] if self.lr is None else float(self.lr),
            horizon=table["horizon"] if self.horizon is None else int(self.horizon),
            hidden=tuple(int(h) for h in self.hidden),
            domain_params=_domain_defaults(self.domain) | dict(self.domain_params),
        )
        if cfg.output is None:
            root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
            cfg.output = os.path.join(root, f"{cfg.domain}_{cfg.method}_beta{cfg.beta:g}_seed{cfg.seed}")
        return cfg

    def utility(self) -> UtilityConfig:
        return UtilityConfig.for_beta(self.beta, self.objective)

    def make_domain(self):
        from .domains import make_domain

        params = dict(self.domain_params)
        if self.horizon is not None:
            params["horizon"] = self.horizon
        return make_domain(self.domain, **params)

    # -- text form ---------------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["domain"] = {"name": self.domain, **{k: repr(v) for k, v in sorted(self.domain_params.items())}}
        cp["method"] = {"method": self.method, "hidden": ",".join(map(str, self.hidden))}
        cp["objective"] = {"kind": self.objective, "beta": repr(self.beta)}
        cp["training"] = {
            "epochs": str(self.epochs), "batch": str(self.batch), "lr": repr(self.lr),
            "horizon": str(self.horizon), "seed": str(self.seed), "optimizer": self.optimizer,
            "grad_clip": repr(self.grad_clip), "fixed_scenarios": str(self.fixed_scenarios).lower(),
            "entropic_guard": str(self.entropic_guard).lower(),
        }
        cp["eval"] = {"episodes": str(self.episodes), "output": str(self.output)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def config_hash(self) -> str:
        """Digest of everything that affects results; the output directory is left out."""
        text = dataclasses.replace(self, output=None).to_ini()
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _domain_defaults(name: str) -> dict:
    # echoed in full so a run can be rebuilt from its config file alone
    params_cls = DOMAINS[name][1]
    default = params_cls()
    return {f.name: getattr(default, f.name) for f in dataclasses.fields(params_cls) if f.name != "horizon"}


def _none_or(conv):
    def f(text):
        return None if text in ("None", "none", "") else conv(text)
    return f


def _flag(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_FIELDS = {
    ("domain", "name"): ("domain", str),
    ("method", "method"): ("method", str),
    ("method", "hidden"): ("hidden", lambda t: tuple(int(x) for x in t.split(",") if x.strip())),
    ("objective", "kind"): ("objective", str),
    ("objective", "beta"): ("beta", _none_or(float)),
    ("training", "epochs"): ("epochs", _none_or(int)),
    ("training", "batch"): ("batch", _none_or(int)),
    ("training", "lr"): ("lr", _none_or(float)),
    ("training", "horizon"): ("horizon", _none_or(int)),
    ("training", "seed"): ("seed", int),
    ("training", "optimizer"): ("optimizer", str),
    ("training", "grad_clip"): ("grad_clip", _none_or(float)),
    ("training", "fixed_scenarios"): ("fixed_scenarios", _flag),
    ("training", "entropic_guard"): ("entropic_guard", _flag),
    ("eval", "episodes"): ("episodes", int),
    ("eval", "output"): ("output", _none_or(str)),
}


def parse_value(text: str):
    """Python literal if it parses as one, else the raw string."""
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def from_ini(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    kwargs = {}
    domain_params = {}
    for section in cp.sections():
        for key, raw in cp[section].items():
            if (section, key) in _FIELDS:
                name, conv = _FIELDS[(section, key)]
                try:
                    kwargs[name] = conv(raw)
                except ValueError as exc:
                    raise ConfigError(f"[{section}] {key}: {exc}") from None
            elif section == "domain":
                domain_params[key] = parse_value(raw)
            else:
                raise ConfigError(f"unknown config key [{section}] {key}")
    kwargs["domain_params"] = domain_params
    cfg = ExperimentConfig(**kwargs)
    if cfg.domain in DOMAINS:
        known = {f.name for f in dataclasses.fields(DOMAINS[cfg.domain][1])}
        unknown = set(domain_params) - known
        if unknown:
            raise ConfigError(f"unknown {cfg.domain} parameters: {sorted(unknown)}")
    return cfg


def load(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return from_ini(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
