"""Command-line interface.

Subcommands: ``simulate``, ``evaluate``, ``fit`` and ``predict``. Each
command first prints a ``config:`` line holding every resolved setting as
JSON; re-running with those settings reproduces the outputs byte for byte.

Exit codes: 0 on success, 1 on runtime or I/O failure, 2 on usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .dataio import read_race_csv, write_curves_csv, write_race_csv, write_rmse_csv
from .errors import ConfigError, RelayRankError
from .evaluation import SplitSpec, run_experiment, split_train_test
from .models import MODEL_NAMES, GpHyperparameters, TrainingSet, fit_model
from .simulator import (
    PAPER_LIKE_BASE_MINUTES,
    PAPER_LIKE_SIGMA,
    PAPER_LIKE_TEAMS,
    SimConfig,
    paper_like_config,
    simulate_race,
)

log = logging.getLogger("relayrank")


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _fraction(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"train fraction must lie in the open interval (0, 1), got {v}")
    return v


def _models(text: str) -> list[str]:
    names = [v.strip() for v in text.split(",") if v.strip()]
    bad = [v for v in names if v not in MODEL_NAMES]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown model(s) {bad}; choose from {','.join(MODEL_NAMES)}")
    return names


def _gp_policy(text: str):
    """``optimize``, ``fixed`` or ``fixed:LENGTHSCALE,SIGNAL_VAR,NOISE_VAR``."""
    if text == "optimize":
        return "optimize"
    if text == "fixed":
        return GpHyperparameters()
    if text.startswith("fixed:"):
        try:
            vals = [float(v) for v in text[len("fixed:"):].split(",")]
            if len(vals) != 3:
                raise ValueError
            return GpHyperparameters(*vals)
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"bad GP policy {text!r}; use optimize, fixed or fixed:ell,s2,noise"
            ) from None
    raise argparse.ArgumentTypeError(f"bad GP policy {text!r}; use optimize, fixed or fixed:ell,s2,noise")


def _policy_str(policy) -> str:
    if isinstance(policy, GpHyperparameters):
        return f"fixed:{policy.lengthscale!r},{policy.signal_var!r},{policy.noise_var!r}"
    return policy


def _echo(command: str, **settings) -> None:
    print("config: " + json.dumps({"command": command, **settings}, sort_keys=True))


def _add_split_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train-fraction", type=_fraction, default=0.8)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--lambda", dest="ridge_lambda", type=float, default=1.0, help="ridge weight (default 1.0)")
    p.add_argument("--gp-policy", type=_gp_policy, default="optimize")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relayrank", description="Relay place prediction from changeover times.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a race and write it as CSV")
    p.add_argument("--paper-like", action="store_true", help="1653 teams, 7 legs, calibrated leg parameters")
    p.add_argument("--teams", type=int)
    p.add_argument("--legs", type=int)
    p.add_argument("--mu-list", type=_float_list, help="per-leg log-scale means (one value broadcasts)")
    p.add_argument("--sigma-list", type=_float_list, help="per-leg log-scale sigmas (one value broadcasts)")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("evaluate", help="run the model x leg RMSE grid on one split")
    p.add_argument("--race", required=True, type=Path)
    p.add_argument("--models", type=_models, default=list(MODEL_NAMES))
    p.add_argument("--out-rmse", required=True, type=Path)
    p.add_argument("--out-curves", type=Path, help="directory for curves_leg<l>.csv files")
    p.add_argument("--workers", type=int, default=1)
    _add_split_flags(p)

    for name, helptext in (("fit", "fit one model and print its parameters"),
                           ("predict", "fit one model and predict a place")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--race", required=True, type=Path)
        p.add_argument("--leg", required=True, type=int)
        p.add_argument("--model", required=True, choices=MODEL_NAMES)
        if name == "predict":
            p.add_argument("--time", required=True, type=float, help="changeover time in minutes")
        else:
            p.add_argument("--out", type=Path, help="also write the parameters as JSON here")
        _add_split_flags(p)
    return parser


def _broadcast(values, m, flag):
    if len(values) == 1:
        return values * m
    if len(values) != m:
        raise UsageError(f"{flag} has {len(values)} values but there are {m} legs")
    return values


def cmd_simulate(args) -> int:
    if args.paper_like:
        clash = [f for f, v in (("--teams", args.teams), ("--legs", args.legs),
                                ("--mu-list", args.mu_list), ("--sigma-list", args.sigma_list)) if v is not None]
        if clash:
            raise UsageError(f"--paper-like cannot be combined with {', '.join(clash)}")
        config = paper_like_config(args.seed)
    else:
        n = PAPER_LIKE_TEAMS if args.teams is None else args.teams
        if n < 2:
            raise UsageError(f"--teams must be at least 2, got {n}")
        m = args.legs or len(args.mu_list or args.sigma_list or [0] * 7)
        if m < 1:
            raise UsageError(f"--legs must be at least 1, got {m}")
        mus = _broadcast(args.mu_list or [math.log(PAPER_LIKE_BASE_MINUTES)], m, "--mu-list")
        sigmas = _broadcast(args.sigma_list or [PAPER_LIKE_SIGMA], m, "--sigma-list")
        try:
            config = SimConfig.from_lists(n, mus, sigmas, args.seed)
        except ConfigError as exc:
            raise UsageError(str(exc)) from None
    _echo(
        "simulate",
        teams=config.n,
        legs=config.m,
        mu_list=[p.mu for p in config.leg_params],
        sigma_list=[p.sigma for p in config.leg_params],
        seed=config.seed,
        out=str(args.out),
    )
    write_race_csv(simulate_race(config), args.out)
    return 0


def cmd_evaluate(args) -> int:
    spec = SplitSpec(args.train_fraction, args.seed)
    _echo(
        "evaluate",
        race=str(args.race),
        train_fraction=spec.train_fraction,
        seed=spec.seed,
        models=args.models,
        ridge_lambda=args.ridge_lambda,
        gp_policy=_policy_str(args.gp_policy),
        out_rmse=str(args.out_rmse),
        out_curves=None if args.out_curves is None else str(args.out_curves),
    )
    table = read_race_csv(args.race)
    try:
        split_train_test(table, spec)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    result = run_experiment(
        table,
        spec,
        args.models,
        ridge_lambda=args.ridge_lambda,
        gp_policy=args.gp_policy,
        workers=args.workers,
    )
    write_rmse_csv(result.report, args.out_rmse)
    if args.out_curves is not None:
        args.out_curves.mkdir(parents=True, exist_ok=True)
        models = [m for m in MODEL_NAMES if m in args.models]
        for leg, rows in result.curves.items():
            write_curves_csv(leg, rows, args.out_curves / f"curves_leg{leg}.csv", models)
    return 0


def _fit_from_args(args, command: str, **extra):
    _echo(
        command,
        race=str(args.race),
        leg=args.leg,
        model=args.model,
        train_fraction=args.train_fraction,
        seed=args.seed,
        ridge_lambda=args.ridge_lambda,
        gp_policy=_policy_str(args.gp_policy),
        **extra,
    )
    table = read_race_csv(args.race)
    if not 1 <= args.leg <= table.m:
        raise UsageError(f"--leg must be in 1..{table.m}, got {args.leg}")
    try:
        train_idx, _ = split_train_test(table, SplitSpec(args.train_fraction, args.seed))
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    x = table.changeover(args.leg)[train_idx]
    train = TrainingSet(x, table.places[train_idx], args.leg)
    return fit_model(args.model, train, ridge_lambda=args.ridge_lambda, gp_policy=args.gp_policy)


def cmd_fit(args) -> int:
    model = _fit_from_args(args, "fit", out=None if args.out is None else str(args.out))
    params = json.dumps({"model": args.model, "leg": args.leg, **model.describe()}, sort_keys=True)
    print("params: " + params)
    if args.out is not None:
        args.out.write_text(params + "\n", encoding="utf-8")
    return 0


def cmd_predict(args) -> int:
    if not (math.isfinite(args.time) and args.time > 0):
        raise UsageError(f"--time must be a positive number of minutes, got {args.time}")
    model = _fit_from_args(args, "predict", time=args.time)
    print(f"place: {model.predict(args.time)}")
    print("params: " + json.dumps(model.describe(), sort_keys=True))
    return 0


COMMANDS = {"simulate": cmd_simulate, "evaluate": cmd_evaluate, "fit": cmd_fit, "predict": cmd_predict}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (RelayRankError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
