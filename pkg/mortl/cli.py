"""Command line interface of mortl."""

import argparse
import asyncio
import logging
import os
import sys
from typing import List, Optional

from pydantic import ValidationError

from mortl.core.config import Config
from mortl.core.defaults_config import DEFAULTS
from mortl.core.exceptions import ConfigError, MortlError
from mortl.models.models import Horizon, ReducedModel
from mortl.services.harness import (
    INIT_METHODS,
    METHODS,
    gramians_summary,
    random_model,
    reduce_model,
    run_sweep,
    verify_reduction,
)
from mortl.services.io import (
    load_manifest,
    load_model,
    load_run_config,
    model_from_manifest,
    save_model,
    write_matrix,
    write_report,
    write_sweep_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _horizon(
    args: argparse.Namespace, manifest_tau: Optional[float]
) -> Horizon:
    tau = args.tau if args.tau is not None else manifest_tau
    if tau is None:
        raise ConfigError("no horizon: pass --tau or set tau in the manifest")
    return Horizon(tau=tau)


def _load(args: argparse.Namespace):
    manifest = load_manifest(args.model)
    model = model_from_manifest(
        manifest, os.path.dirname(args.model) or "."
    )
    return manifest, model, _horizon(args, manifest.tau)


def cmd_reduce(args: argparse.Namespace) -> int:
    """Reduce a model and write the reduced matrices and the report."""
    manifest, full, h = _load(args)
    run_config = load_run_config(args.config)
    red, report = reduce_model(
        full, h, args.order, args.method, args.init, run_config, args.seed
    )
    name = args.name or f"{manifest.name}_r{args.order}"
    save_model(red, args.out, name, h.tau)
    write_report(report, os.path.join(args.out, f"{name}_report.json"))
    print(report.model_dump_json(indent=2))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run TL-H2Opt over a range of orders and write the CSV table."""
    _, full, h = _load(args)
    run_config = load_run_config(args.config)
    r_max = args.r_max if args.r_max is not None else full.n - 1
    orders = range(args.r_min, r_max + 1, args.step)
    rows = asyncio.run(run_sweep(full, h, orders, args.init, run_config))
    if args.out is None:
        write_sweep_csv(rows, sys.stdout, timing=not args.no_timing)
    else:
        with open(args.out, "w", newline="") as file:
            write_sweep_csv(rows, file, timing=not args.no_timing)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Verify a reduced model; exit 1 when a check fails."""
    _, full, h = _load(args)
    reduced = load_model(args.reduced)
    red = ReducedModel(A=reduced.A, B=reduced.B, C=reduced.C)
    run_config = load_run_config(args.config)
    report = verify_reduction(full, red, h, run_config.verify, args.seed)
    if args.report is not None:
        write_report(report, args.report)
    print(report.model_dump_json(indent=2))
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_gramians(args: argparse.Namespace) -> int:
    """Print the time-limited Gramian summary, optionally save P and Q."""
    manifest, full, h = _load(args)
    pair, summary = gramians_summary(full, h)
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        write_matrix(
            os.path.join(args.out, f"{manifest.name}_P_tau.mtx"), pair.P_tau
        )
        write_matrix(
            os.path.join(args.out, f"{manifest.name}_Q_tau.mtx"), pair.Q_tau
        )
    print(summary.model_dump_json(indent=2))
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    """Write a random model and its manifest."""
    model = random_model(args.n, args.m, args.p, args.seed, args.shift)
    path = save_model(model, args.out, args.name, args.tau)
    print(path)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    """Serve the HTTP API with uvicorn."""
    import uvicorn

    uvicorn.run("mortl.main:app", host=args.host, port=args.port)
    return EXIT_OK


def _model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model", required=True, help="JSON manifest of the full model"
    )
    parser.add_argument(
        "--tau", type=float, default=None, help="horizon length"
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per action."""
    parser = argparse.ArgumentParser(
        prog=Config.PROJECT_NAME,
        description="Time-limited H2-optimal model order reduction.",
    )
    parser.add_argument(
        "--version", action="version", version=Config.VERSION
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="log to stderr (-v info, -vv debug)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    reduce = sub.add_parser("reduce", help="reduce a model")
    _model_arguments(reduce)
    reduce.add_argument("--order", "-r", type=int, required=True)
    reduce.add_argument("--method", choices=METHODS, default="tl-h2opt")
    reduce.add_argument("--init", choices=INIT_METHODS, default=None)
    reduce.add_argument("--config", default=None, help="JSON run config")
    reduce.add_argument("--out", default=".", help="output directory")
    reduce.add_argument("--name", default=None, help="reduced model name")
    reduce.add_argument("--seed", type=int, default=None)
    reduce.set_defaults(func=cmd_reduce)

    sweep = sub.add_parser("sweep", help="optimize a range of orders")
    _model_arguments(sweep)
    sweep.add_argument("--r-min", type=int, default=1)
    sweep.add_argument("--r-max", type=int, default=None)
    sweep.add_argument(
        "--step", type=int, default=DEFAULTS["sweep"]["step"]
    )
    sweep.add_argument("--init", choices=INIT_METHODS, default="tl-bt")
    sweep.add_argument("--config", default=None, help="JSON run config")
    sweep.add_argument("--out", default=None, help="CSV file, else stdout")
    sweep.add_argument(
        "--no-timing",
        action="store_true",
        help="leave the seconds column empty",
    )
    sweep.set_defaults(func=cmd_sweep)

    verify = sub.add_parser("verify", help="verify a reduced model")
    _model_arguments(verify)
    verify.add_argument(
        "--reduced", required=True, help="manifest of the reduced model"
    )
    verify.add_argument("--config", default=None, help="JSON run config")
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--report", default=None, help="JSON report file")
    verify.set_defaults(func=cmd_verify)

    gramians = sub.add_parser("gramians", help="time-limited Gramians")
    _model_arguments(gramians)
    gramians.add_argument("--out", default=None, help="output directory")
    gramians.set_defaults(func=cmd_gramians)

    generate = sub.add_parser("generate", help="write a random model")
    generate.add_argument("--n", type=int, required=True)
    generate.add_argument("--m", type=int, default=1)
    generate.add_argument("--p", type=int, default=1)
    generate.add_argument("--seed", type=int, default=None)
    generate.add_argument("--shift", type=float, default=0.0)
    generate.add_argument("--tau", type=float, default=None)
    generate.add_argument("--name", default="random")
    generate.add_argument("--out", default=".")
    generate.set_defaults(func=cmd_generate)

    serve = sub.add_parser("serve", help="serve the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line interface.

    Returns
    -------
    int
        0 on success, 1 on a numerical or input failure, 2 on a usage
        or configuration error.

    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    _configure_logging(args.verbose)
    if getattr(args, "seed", "unset") is None:
        try:
            args.seed = Config.seed()
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MortlError as exc:
        logger.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
