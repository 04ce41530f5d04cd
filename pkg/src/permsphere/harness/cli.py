"""Command line entry point.

    permsphere calibrate --n 25 --nu 0.3 --seed 0
    permsphere synthetic --n 25 --steps 100 --nu 0.1,0.5,0.9 --missing 0 --out noise_sweep.csv
    permsphere track --generate 6,200 --nu 0.3 --missing 0.2 --out track6.csv
    permsphere roundtrip-check --n 6

Every subcommand accepts ``--config FILE`` with ``key = value`` lines named
after the flags; flags given on the command line override the file.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from ..embedding import build_basis
from .checks import embedding_checks
from .config import ConfigError, config_to_argv, read_config
from .experiments import (
    CalibrationError,
    ErrorReport,
    SyntheticConfig,
    calibrate_kappa,
    default_kappa_tr,
    observation_error,
    rate_matched_kappa_tr,
    run_synthetic,
    run_tracking,
)
from .trajectories import (
    SwapModelParams,
    TrajectoryFormatError,
    export_trajectories,
    generate_trajectories,
    ingest_trajectories,
)

COMMANDS = ("calibrate", "synthetic", "track", "roundtrip-check")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected OBJECTS,FRAMES, got {text!r}") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="permsphere", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value file with default flag values")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output CSV (default: stdout)")

    p = sub.add_parser("calibrate", help="find the observation concentration for a noise level")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--draws", type=int, default=2000)

    p = sub.add_parser("synthetic", help="static hidden permutation inference")
    common(p)
    p.add_argument("--n", type=int, default=25)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--nu", type=_float_list, default=[0.1])
    p.add_argument("--missing", type=_float_list, default=[0.0])
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--kappa-tr", default="static", help="'static' (no prediction) or a number")
    p.add_argument("--kappa-obs", type=float, default=None)
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("track", help="identity tracking under proximity swaps")
    common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", help="trajectory CSV (frame,object,x,y)")
    src.add_argument("--generate", type=_pair, metavar="OBJECTS,FRAMES")
    p.add_argument("--pswap", type=float, default=0.1)
    p.add_argument("--scale", type=float, default=0.1)
    p.add_argument("--nu", type=_float_list, default=[0.3])
    p.add_argument("--missing", type=_float_list, default=[0.0])
    p.add_argument("--kappa-tr", default="rate",
                   help="'rate' (swap-rate matched), 'swap' (one swap per frame) or a number")
    p.add_argument("--kappa-obs", type=float, default=None)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--save-trajectories", help="write the (generated) trajectories to this CSV")

    p = sub.add_parser("roundtrip-check", help="embedding self-test")
    common(p)
    p.add_argument("--n", type=int, required=True)
    return parser


def _apply_config(argv: list[str]) -> list[str]:
    path = None
    rest: list[str] = []
    it = iter(range(len(argv)))
    for i in it:
        tok = argv[i]
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            next(it, None)
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
        else:
            rest.append(tok)
    if path is None:
        return rest
    flags = config_to_argv(read_config(path))
    for i, tok in enumerate(rest):
        if tok in COMMANDS:
            return rest[: i + 1] + flags + rest[i + 1:]
    return rest + flags


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_calibrate(args) -> int:
    basis = build_basis(args.n)
    kappa = calibrate_kappa(args.n, args.nu, basis, args.seed, draws=args.draws)
    # independent stream for the reported check
    check = observation_error(args.n, kappa, basis, np.random.default_rng([args.seed, 99]), args.draws)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("n", "nu", "kappa", "empirical_error"))
    w.writerow((args.n, repr(args.nu), repr(kappa), repr(check)))
    _emit(buf.getvalue(), args.out)
    return 0


def _cmd_synthetic(args) -> int:
    kappa_tr = None if str(args.kappa_tr).lower() == "static" else float(args.kappa_tr)
    cfgs = [
        SyntheticConfig(
            n=args.n, steps=args.steps, nu=nu, missing_frac=m, repeats=args.repeats,
            seed=args.seed, kappa_tr=kappa_tr, kappa_obs=args.kappa_obs, draws=args.draws,
        )
        for nu in args.nu
        for m in args.missing
    ]
    report = ErrorReport()
    for cfg in cfgs:
        report.extend(run_synthetic(cfg, jobs=args.jobs))
    _emit(report.to_csv(), args.out)
    return 0


def _cmd_track(args) -> int:
    params = SwapModelParams(p_swap=args.pswap, s=args.scale)
    if args.data:
        data = ingest_trajectories(args.data)
    else:
        objects, frames = args.generate or (6, 200)
        data = generate_trajectories(objects, frames, np.random.default_rng([args.seed, 7]))
    if args.save_trajectories:
        export_trajectories(data, args.save_trajectories)
    mode = str(args.kappa_tr).lower()
    if mode == "rate":
        kappa_tr = rate_matched_kappa_tr(data, params)
    elif mode == "swap":
        kappa_tr = default_kappa_tr(data.objects)
    else:
        kappa_tr = float(mode)
    report = ErrorReport()
    for nu in args.nu:
        for m in args.missing:
            report.extend(run_tracking(
                data, params, nu, m, kappa_tr, args.repeats, args.seed,
                kappa_obs=args.kappa_obs, draws=args.draws, jobs=args.jobs,
            ))
    _emit(report.to_csv(), args.out)
    return 0


def _cmd_roundtrip(args) -> int:
    results = embedding_checks(args.n, seed=args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("check", "value", "passed"))
    for name, value, ok in results:
        w.writerow((name, repr(value), "yes" if ok else "no"))
    _emit(buf.getvalue(), args.out)
    return 0 if all(ok for _, _, ok in results) else 1


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(argv)
    except ConfigError as exc:
        parser.error(str(exc))
    args = parser.parse_args(argv)
    handler = {
        "calibrate": _cmd_calibrate,
        "synthetic": _cmd_synthetic,
        "track": _cmd_track,
        "roundtrip-check": _cmd_roundtrip,
    }[args.command]
    try:
        return handler(args)
    except (ValueError, CalibrationError, TrajectoryFormatError, FileNotFoundError) as exc:
        print(f"permsphere {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
