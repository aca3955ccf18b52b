"""Command-line entry point.

Examples
--------
::

    ioncosmo modes --n-ions 5 --out out/modes
    ioncosmo run --config configs/paper_envisioned.cfg --out out/paper
    ioncosmo sweep --config configs/rise_time_sweep.cfg --workers 4
    ioncosmo cosmo --config configs/de_sitter.cfg
    ioncosmo validate --tol 1e-11

The global flags ``--config``, ``--out``, ``--seed`` and ``--tol`` may be
given before or after the subcommand.  Every subcommand except ``validate``
writes CSV tables, PNG figures (unless ``--no-figures``) and
``manifest.txt`` into the output directory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__
from .config import load_config, parse_config
from .errors import SimulationError
from .modeqn import DEFAULT_TOL
from .runner import (modes_table, run_scenario, run_sweep, write_manifest, write_table)

EXIT_FAILED_CHECK = 1
EXIT_ERROR = 2


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default, help="scenario config file")
    parser.add_argument("--out", metavar="DIR", default=default,
                        help="output directory (overrides output.directory)")
    parser.add_argument("--seed", type=int, metavar="N", default=default,
                        help="random seed (overrides scenario.seed)")
    parser.add_argument("--tol", type=float, metavar="X", default=default,
                        help=f"integration tolerance (default {DEFAULT_TOL:g})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ioncosmo",
        description="Particle creation in a ramped ion trap and its cosmological analogue.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _global_flags(p, suppress=True)
        return p

    p = add("modes", "equilibrium positions and normal modes of an N-ion chain")
    p.add_argument("--n-ions", type=int, default=None,
                   help="chain length when no config is given (default 3)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")

    p = add("run", "run one trap or cosmology scenario")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")

    p = add("sweep", "evaluate a scenario over the [sweep] axis of its config")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")

    p = add("cosmo", "mode spectrum of a cosmology scenario")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")

    p = add("validate", "run the self-check suite and print a JSON report")
    p.add_argument("--inject-fault", choices=("hessian_sign",), default=None,
                   help="deliberately break a component (negative control)")
    p.add_argument("--only", action="append", default=None, metavar="CHECK",
                   help="run only the named check (repeatable)")
    return parser


def _fail(message):
    print(f"ioncosmo: error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _load(args, required=True):
    if args.config is None:
        if required:
            raise SimulationError(f"'{args.command}' needs --config PATH")
        return None
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_value("scenario.seed", args.seed)
    return config


def _out_dir(args, config):
    if args.out is not None:
        return args.out
    if config is not None:
        return config.values["output"]["directory"]
    return "out"


def _command_line(argv):
    return " ".join(["ioncosmo"] + list(argv))


def _finish(directory, config, argv, tol, files):
    files.append(write_manifest(directory, config, _command_line(argv), tol, files))
    for path in files:
        print(path)
    return 0


def _cmd_modes(args, argv, tol):
    from .chain import ChainConfiguration

    config = _load(args, required=False)
    if config is None:
        n = 3 if args.n_ions is None else args.n_ions
        config = parse_config(f"[scenario]\nkind = trap_chain\n[ramp]\nomega_initial = 1\n"
                              f"omega_final = 1\nrise_time = 0\nshape = step\n"
                              f"[chain]\nn_ions = {n}\n")
        if args.seed is not None:
            config = config.with_value("scenario.seed", args.seed)
    elif config.kind == "cosmology":
        raise SimulationError("'modes' needs a trap scenario config")
    elif args.n_ions is not None:
        config = config.with_value("chain.n_ions", args.n_ions)
    directory = _out_dir(args, config)
    os.makedirs(directory, exist_ok=True)
    table = modes_table(ChainConfiguration.build(config.values["chain"]["n_ions"]))
    files = [write_table(table, directory)]
    if not args.no_figures:
        from .plotting import plot_modes

        files += plot_modes(table, directory)
    return _finish(directory, config, argv, tol, files)


def _cmd_run(args, argv, tol, expect=None):
    config = _load(args)
    if expect == "cosmology" and config.kind != "cosmology":
        raise SimulationError(f"'cosmo' needs a cosmology config, got kind {config.kind!r}")
    result = run_scenario(config, tol)
    directory = _out_dir(args, config)
    os.makedirs(directory, exist_ok=True)
    files = [write_table(t, directory) for t in result.tables.values()]
    if not args.no_figures:
        from .plotting import plot_cosmology, plot_trap

        plot = plot_cosmology if config.kind == "cosmology" else plot_trap
        files += plot(result, directory)
    for key, value in result.summary.items():
        print(f"{key} = {value}")
    return _finish(directory, config, argv, tol, files)


def _cmd_sweep(args, argv, tol):
    config = _load(args)
    if args.workers < 1:
        raise SimulationError("--workers must be >= 1")
    table = run_sweep(config, tol, workers=args.workers)
    directory = _out_dir(args, config)
    os.makedirs(directory, exist_ok=True)
    files = [write_table(table, directory)]
    if not args.no_figures:
        from .plotting import plot_sweep

        files += plot_sweep(table, directory)
    return _finish(directory, config, argv, tol, files)


def _cmd_validate(args, tol):
    from .validation import CHECKS, report, run_validation

    if args.only:
        unknown = sorted(set(args.only) - set(CHECKS))
        if unknown:
            raise SimulationError(f"unknown check(s) {', '.join(unknown)}; available: {', '.join(CHECKS)}")
    results = run_validation(tol, args.inject_fault, args.only)
    rep = report(results, tol, args.inject_fault)
    # checks that raised carry NaN values, which JSON spells null
    for check in rep["checks"]:
        for key, value in check.items():
            if isinstance(value, float) and not math.isfinite(value):
                check[key] = None
    text = json.dumps(rep, indent=2, allow_nan=False)
    print(text)
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "validation.json"), "w", encoding="utf-8", newline="") as fh:
            fh.write(text + "\n")
    return 0 if rep["passed"] else EXIT_FAILED_CHECK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    tol = DEFAULT_TOL if args.tol is None else args.tol
    if not (math.isfinite(tol) and 0 < tol < 1):
        return _fail(f"--tol must lie in (0, 1), got {tol!r}")
    try:
        if args.command == "validate":
            return _cmd_validate(args, tol)
        if args.command == "modes":
            return _cmd_modes(args, argv, tol)
        if args.command == "sweep":
            return _cmd_sweep(args, argv, tol)
        return _cmd_run(args, argv, tol, expect="cosmology" if args.command == "cosmo" else None)
    except (SimulationError, OSError) as exc:
        return _fail(f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    raise SystemExit(main())
