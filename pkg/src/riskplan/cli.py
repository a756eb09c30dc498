"""Command-line front end: ``riskplan {train,eval,compare,sweep,check}``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import config as cfgmod
from . import experiment
from .evaluation import ReturnSamples, compare_variance
from .planners import TrainingError
from .serialization import ParamsFormatError, ParamsMismatchError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_UNKNOWN_NAME = 3
EXIT_BAD_CONFIG = 4
EXIT_TRAINING = 5
EXIT_MISMATCH = 6


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _experiment_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="INI file; flags given here override it")
    g.add_argument("--domain")
    g.add_argument("--method")
    g.add_argument("--objective", help="risk-neutral, mean-variance or exact-entropic")
    g.add_argument("--beta", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--horizon", type=int)
    g.add_argument("--hidden", help="comma-separated hidden widths")
    g.add_argument("--seed", type=int)
    g.add_argument("--episodes", type=int)
    g.add_argument("--output")
    g.add_argument("--optimizer", choices=["rmsprop", "adam"])
    g.add_argument("--grad-clip", type=float)
    g.add_argument("--no-grad-clip", action="store_true")
    g.add_argument("--fixed-scenarios", action="store_true", default=None)
    g.add_argument("--no-entropic-guard", action="store_true")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="domain parameter override, repeatable")


def build_config(args) -> cfgmod.ExperimentConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.ExperimentConfig()
    for name in ("domain", "method", "objective", "beta", "epochs", "batch", "lr", "horizon", "seed",
                 "episodes", "output", "optimizer", "fixed_scenarios"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if args.hidden:
        cfg.hidden = tuple(int(x) for x in args.hidden.split(",") if x.strip())
    if args.grad_clip is not None:
        cfg.grad_clip = args.grad_clip
    if args.no_grad_clip:
        cfg.grad_clip = None
    if args.no_entropic_guard:
        cfg.entropic_guard = False
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise cfgmod.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        cfg.domain_params[key.strip()] = cfgmod.parse_value(raw.strip())
    try:
        resolved = cfg.resolved()
    except cfgmod.ConfigError as exc:
        code = EXIT_UNKNOWN_NAME if str(exc).startswith("unknown") else EXIT_BAD_CONFIG
        raise _Fail(code, str(exc)) from None
    try:
        resolved.make_domain()
    except (KeyError, ValueError, TypeError) as exc:
        raise _Fail(EXIT_BAD_CONFIG, f"bad domain parameters: {exc}") from None
    return resolved


def cmd_train(args) -> int:
    cfg = build_config(args)
    paths = experiment.run_train(cfg)
    for k, v in paths.items():
        print(f"{k}: {v}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = build_config(args)
    res = experiment.run_eval(cfg, args.params, args.output, keep_trajectories=args.keep_trajectories,
                              eval_seed=args.eval_seed)
    print(f"mean = {res.summary.mean!r}")
    print(f"variance = {res.summary.variance!r}")
    for k, v in res.rates.items():
        print(f"{k} = {v!r}")
    for k, v in res.paths.items():
        print(f"{k}: {v}")
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        a = ReturnSamples.read_csv(args.a)
        b = ReturnSamples.read_csv(args.b)
    except (OSError, KeyError, ValueError) as exc:
        raise _Fail(EXIT_BAD_CONFIG, f"cannot read returns: {exc}") from None
    report = compare_variance(a, b, resamples=args.resamples, confidence=args.confidence, seed=args.seed)
    text = "\n".join([f"a = {args.a}", f"b = {args.b}", *report.lines()]) + "\n"
    sys.stdout.write(text)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    betas = sorted((float(b) for b in args.betas.split(",")), reverse=True)
    entries = experiment.run_sweep(cfg, betas)
    sys.stdout.write(experiment.sweep_table(entries))
    return EXIT_TRAINING if any(e.error for e in entries) else EXIT_OK


def cmd_check(args) -> int:
    from .checks import run_checks

    results = run_checks(quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riskplan", description="Risk-aware planning by backpropagation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a plan or policy; writes params, trace and config")
    _experiment_flags(t)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a params file on fresh scenarios")
    _experiment_flags(e)
    e.add_argument("--params", required=True)
    e.add_argument("--keep-trajectories", type=int, default=100)
    e.add_argument("--eval-seed", type=int)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="bootstrap variance comparison of two returns CSVs")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--resamples", type=int, default=10_000)
    c.add_argument("--confidence", type=float, default=0.95)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--report", help="also write the report to this file")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep", help="train and evaluate one agent per beta")
    _experiment_flags(s)
    s.add_argument("--betas", required=True, help="comma-separated, e.g. 0,-10,-100")
    s.set_defaults(func=cmd_sweep)

    k = sub.add_parser("check", help="run the invariant and gradient oracle suite")
    k.add_argument("--quick", action="store_true", help="fewer random instances")
    k.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except ParamsMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except ParamsFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except TrainingError as exc:
        print(f"error: training aborted: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
