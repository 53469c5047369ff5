"""Command-line driver: generate instances, certify runs, sweep, search.

Exit codes follow a CI-friendly contract: 0 = success / all bounds
respected, 1 = a finding (violated bound), 2 = usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from .errors import GameboundError, ValidationError
from .games import dump_json, game_from_json, game_to_json
from .instances import (
    domino_basic,
    domino_improved,
    domino_to_json,
    instance_from_json,
    pscli2_instance,
    pscli2_to_json,
)
from .methods import NoiseModel, PSCLIMethod, save_trajectory_csv, tune_step_size
from .ratelab import certify, evaluate_bounds, random_minmax_game, search_violations

_METHOD_ALIASES = {
    "gd": "simultaneous-gd",
    "simultaneous-gd": "simultaneous-gd",
    "alt-gd": "alternating-gd",
    "alternating-gd": "alternating-gd",
    "momentum": "momentum-gd",
    "momentum-gd": "momentum-gd",
    "negative-momentum": "negative-momentum-gd",
    "negative-momentum-gd": "negative-momentum-gd",
    "eg": "extragradient",
    "extragradient": "extragradient",
    "sgd": "stochastic-gd",
    "stochastic-gd": "stochastic-gd",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run request shared by the certify and search commands."""

    command: str
    method: str | None
    eta: str | None
    beta: float | None
    noise_scale: float
    T: int
    seed: int | None
    out: str

    def __post_init__(self):
        if self.T < 1:
            raise ValidationError(f"horizon T must be >= 1, got {self.T}")
        stochastic = (self.method in ("sgd", "stochastic-gd")
                      or self.noise_scale > 0)
        if stochastic and self.seed is None:
            raise ValidationError(
                "a --seed is required whenever a stochastic component is used"
            )


def _config_from_args(command: str, args) -> ExperimentConfig:
    return ExperimentConfig(
        command=command,
        method=getattr(args, "method", None),
        eta=getattr(args, "eta", None),
        beta=getattr(args, "beta", None),
        noise_scale=getattr(args, "noise_scale", 0.0),
        T=getattr(args, "T", 1),
        seed=args.seed,
        out=args.out,
    )


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_game_file(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return game_from_json(obj), instance_from_json(obj)


def _parse_dims(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _build_method(args, game, instance) -> PSCLIMethod:
    variant = _METHOD_ALIASES[args.method]
    noise = None
    beta = getattr(args, "beta", None)
    if variant == "stochastic-gd":
        noise = NoiseModel(scale=args.noise_scale, seed=args.seed or 0)
    if variant not in ("momentum-gd", "negative-momentum-gd"):
        beta = None
    if args.eta == "tune":
        template = PSCLIMethod(variant=variant, eta=1.0, beta=beta, noise=noise)
        tuned = tune_step_size(template, game)
        eta = tuned.eta
    else:
        eta = float(args.eta)
    return PSCLIMethod(variant=variant, eta=eta, beta=beta, noise=noise)


def _cmd_gen(args) -> int:
    if args.kind == "domino-basic":
        instance = domino_basic(args.mu1, args.mu2, args.c, args.dim)
        obj = domino_to_json(instance)
    elif args.kind == "domino-improved":
        instance = domino_improved(args.mu1, args.mu2, args.mu12, args.L12, args.dim)
        obj = domino_to_json(instance)
    elif args.kind == "pscli2":
        instance = pscli2_instance(
            args.mu1, args.L1, args.mu2, args.L2, args.mu12, args.L12,
            args.block_dim,
        )
        obj = pscli2_to_json(instance)
    else:  # random
        if args.seed is None:
            raise GameboundError("gen random requires --seed")
        rng = np.random.default_rng(args.seed)
        game = random_minmax_game(_parse_dims(args.dims), rng)
        obj = game_to_json(game)
        obj["analysis"] = {"kind": "random", "seed": args.seed, "dims": args.dims}
    _write_text(args.out, dump_json(obj))
    return 0


def _cmd_certify(args) -> int:
    game, instance = _load_game_file(args.game)
    from .instances import PSCLI2Instance

    domino = instance if instance is not None and not isinstance(instance, PSCLI2Instance) else None
    method = _build_method(args, game, domino)
    w0 = np.zeros(game.d)
    report = certify(
        method, game, w0, args.T, args.p, instance=domino, seed=args.seed
    )
    _write_text(args.out, dump_json(report.to_json()))
    if args.trajectory:
        save_trajectory_csv(report.trajectory, args.trajectory)
    return 0 if report.all_respected else 1


def _cmd_sweep(args) -> int:
    values = _sweep_values(args)
    if values.size == 0:
        raise GameboundError("sweep grid is empty")
    lines = []
    if args.param == "eta":
        if not args.game or not args.method:
            raise GameboundError("sweep over eta needs --game and --method")
        game, instance = _load_game_file(args.game)
        variant = _METHOD_ALIASES[args.method]
        beta = args.beta if variant in ("momentum-gd", "negative-momentum-gd") else None
        from .methods import asymptotic_rate

        bounds = evaluate_bounds(game, 2 if variant in ("momentum-gd", "negative-momentum-gd") else 1)
        names = [entry.name for entry in bounds]
        lines.append("eta,rho_asym," + ",".join(names))
        for eta in values:
            method = PSCLIMethod(variant=variant, eta=float(eta), beta=beta)
            rho = asymptotic_rate(method, game)
            row = [repr(float(eta)), repr(float(rho))]
            row.extend("" if e.value is None else repr(e.value) for e in bounds)
            lines.append(",".join(row))
    else:
        if args.kind not in ("domino-basic", "domino-improved"):
            raise GameboundError(
                "instance-parameter sweeps need --kind domino-basic|domino-improved"
            )
        lines.append(f"{args.param},chi,kappa")
        for value in values:
            params = {
                "mu1": args.mu1, "mu2": args.mu2, "c": args.c,
                "mu12": args.mu12, "L12": args.L12, "dim": args.dim,
            }
            if args.param not in params:
                raise GameboundError(f"unknown sweep parameter {args.param!r}")
            params[args.param] = float(value)
            if args.kind == "domino-basic":
                inst = domino_basic(params["mu1"], params["mu2"], params["c"], int(params["dim"]))
            else:
                inst = domino_improved(
                    params["mu1"], params["mu2"], params["mu12"],
                    params["L12"], int(params["dim"]),
                )
            lines.append(
                ",".join([repr(float(value)), repr(inst.chi), repr(inst.kappa)])
            )
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _sweep_values(args) -> np.ndarray:
    if args.values:
        return np.array([float(part) for part in args.values.split(",") if part != ""])
    if args.log_range:
        lo, hi, count = args.log_range.split(":")
        return np.geomspace(float(lo), float(hi), int(count))
    return np.array([])


def _cmd_search(args) -> int:
    methods = tuple(_METHOD_ALIASES[name] for name in args.methods.split(","))
    violations = search_violations(
        seed=args.seed,
        trials=args.trials,
        dims=_parse_dims(args.dims),
        p=args.p,
        methods=methods,
        T=args.T,
    )
    payload = {
        "seed": args.seed,
        "trials": args.trials,
        "dims": list(_parse_dims(args.dims)),
        "p": args.p,
        "methods": list(methods),
        "violations": violations,
    }
    _write_text(args.out, dump_json(payload))
    return 0 if not violations else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gamebound",
        description="Quadratic-game lower-bound laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance file")
    gen.add_argument("kind", choices=["domino-basic", "domino-improved", "pscli2", "random"])
    gen.add_argument("--mu1", type=float, default=1.0)
    gen.add_argument("--mu2", type=float, default=1.0)
    gen.add_argument("--L1", type=float, default=1.0)
    gen.add_argument("--L2", type=float, default=1.0)
    gen.add_argument("--mu12", type=float, default=0.0)
    gen.add_argument("--L12", type=float, default=1.0)
    gen.add_argument("--c", type=float, default=1.0)
    gen.add_argument("--dim", type=int, default=256)
    gen.add_argument("--block-dim", type=int, default=1, dest="block_dim")
    gen.add_argument("--dims", type=str, default="4,4")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", type=str, default="-")
    gen.set_defaults(func=_cmd_gen)

    cert = sub.add_parser("certify", help="run a method and judge every bound")
    cert.add_argument("game", type=str, help="game JSON file")
    cert.add_argument("--method", choices=sorted(_METHOD_ALIASES), required=True)
    cert.add_argument("--eta", type=str, default="tune", help="step size or 'tune'")
    cert.add_argument("--beta", type=float, default=None)
    cert.add_argument("--noise-scale", type=float, default=0.0, dest="noise_scale")
    cert.add_argument("-T", type=int, default=400)
    cert.add_argument("--p", type=int, default=None)
    cert.add_argument("--seed", type=int, default=None)
    cert.add_argument("--out", type=str, default="-")
    cert.add_argument("--trajectory", type=str, default=None, help="also write CSV")
    cert.set_defaults(func=_cmd_certify)

    sweep = sub.add_parser("sweep", help="rate or instance-constant sweeps to CSV")
    sweep.add_argument("--param", type=str, required=True)
    sweep.add_argument("--values", type=str, default=None)
    sweep.add_argument("--log-range", type=str, default=None, dest="log_range",
                       help="lo:hi:count, log-spaced")
    sweep.add_argument("--game", type=str, default=None)
    sweep.add_argument("--method", choices=sorted(_METHOD_ALIASES), default=None)
    sweep.add_argument("--beta", type=float, default=None)
    sweep.add_argument("--kind", type=str, default=None)
    sweep.add_argument("--mu1", type=float, default=1.0)
    sweep.add_argument("--mu2", type=float, default=1.0)
    sweep.add_argument("--mu12", type=float, default=0.0)
    sweep.add_argument("--L12", type=float, default=1.0)
    sweep.add_argument("--c", type=float, default=1.0)
    sweep.add_argument("--dim", type=int, default=64)
    sweep.add_argument("--out", type=str, default="-")
    sweep.set_defaults(func=_cmd_sweep)

    search = sub.add_parser("search", help="randomized violation hunt")
    search.add_argument("--trials", type=int, required=True)
    search.add_argument("--dims", type=str, default="4,4")
    search.add_argument("--p", type=int, default=1)
    search.add_argument("--seed", type=int, default=0)
    search.add_argument("--methods", type=str, default="gd,eg")
    search.add_argument("-T", type=int, default=400)
    search.add_argument("--out", type=str, default="-")
    search.set_defaults(func=_cmd_search)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GameboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
