"""Command line front end.

Subcommands: equilibrium, response, flux-scan, validate-config,
pade-check.  Exit codes: 0 success, 2 parse error, 3 validation error
(including pole collisions and capacity limits), 4 no convergence,
5 numeric failure, 1 anything else.

Worker-count precedence: --workers flag, then the RINGHEOM_WORKERS
environment variable, then the config value.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import config as config_mod
from .errors import (
    CapacityExceeded,
    ConfigParseError,
    ConfigValidationError,
    NoConvergence,
    NonFiniteState,
    PoleCollision,
    StepUnderflow,
)
from .runner import pade_report, run_equilibrium, run_flux_scan, run_response

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_CONVERGENCE = 4
EXIT_NUMERIC = 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringheom",
        description="Hierarchical quantum Fokker-Planck solver for a flux-threaded ring",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("equilibrium", "relax to the steady state and write the position distribution"),
        ("response", "compute the dipole response record and its spectrum"),
        ("flux-scan", "tabulate equilibrium observables over a list of flux values"),
        ("validate-config", "parse and validate a config file, report the hash"),
        ("pade-check", "print the bath decomposition and its coth surrogate error"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", required=True, help="path to the config file")
        p.add_argument("-o", "--output-dir", default=None, help="override the output directory")
        p.add_argument("--workers", type=int, default=None, help="parallel rhs worker count")
        p.add_argument(
            "--strict-paper-form",
            action="store_true",
            help="drop the commutator profile from the j=0 fluctuation term",
        )
    return parser


def _effective_config(args) -> config_mod.RunConfig:
    cfg = config_mod.load_config(args.config)
    updates = {}
    env_workers = os.environ.get(config_mod.WORKERS_ENV)
    if env_workers is not None:
        updates["workers"] = int(env_workers)
    if args.workers is not None:
        updates["workers"] = args.workers
    if updates.get("workers", cfg.workers) < 1:
        raise ConfigValidationError("workers must be >= 1")
    if args.output_dir is not None:
        updates["outdir"] = args.output_dir
    if args.strict_paper_form:
        updates["strict_paper_form"] = True
    return dataclasses.replace(cfg, **updates) if updates else cfg


_RUNNERS = {
    "equilibrium": ("equilibrium",),
    "response": ("response", "spectrum"),
    "flux-scan": ("flux-scan",),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _effective_config(args)
        if args.command == "validate-config":
            print(f"ok: experiment={cfg.experiment} hash={cfg.config_hash}")
            return EXIT_OK
        if args.command == "pade-check":
            print(pade_report(cfg))
            return EXIT_OK
        allowed = _RUNNERS[args.command]
        if cfg.experiment not in allowed:
            raise ConfigValidationError(
                f"config declares experiment={cfg.experiment}; "
                f"subcommand {args.command} expects one of {allowed}"
            )
        runner = {
            "equilibrium": run_equilibrium,
            "response": run_response,
            "flux-scan": run_flux_scan,
        }[args.command]
        paths = runner(cfg)
        for name, path in sorted(paths.items()):
            print(f"{name}: {path}")
        return EXIT_OK
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigValidationError, PoleCollision, CapacityExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (NonFiniteState, StepUnderflow) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    raise SystemExit(main())
