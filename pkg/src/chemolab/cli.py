"""Command line front end.

Subcommands:
  simulate          run one scenario from a config file or preset
  analyze-motility  classify a motility parameter set and print JSON
  dispersion        tabulate linear growth rates over wavenumbers
  sweep             run a parameter sweep and aggregate a results table

Configuration errors exit with status 2 and a one-line JSON object on
stderr; runtime failures (positivity loss, non-convergence) exit with 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from .errors import ChemolabError, ConfigError
from .harness import PRESETS, ScenarioConfig, load_scenario, load_sweep, run_scenario, run_sweep
from .motility import MotilityModel, analyze
from .solver import dispersion_curve


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemolab",
        description="numerical laboratory for a local-sensing chemotaxis model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario")
    sim.add_argument("--config", help="INI scenario file")
    sim.add_argument("--preset", choices=sorted(PRESETS), help="named scenario preset")
    sim.add_argument("--out-dir", help="output directory (overrides config)")
    sim.add_argument("--seed", type=int, default=0, help="seed for initial noise")
    sim.add_argument("--t-end", type=float, help="override final time")
    sim.add_argument("--engine", help="stepping engine: auto, compiled, or pure")
    sim.add_argument("--quiet", action="store_true", help="suppress progress logging")

    mot = sub.add_parser("analyze-motility", help="classify a motility parameter set")
    for name, default in (("m", 1.0), ("a", 0.0), ("b", 1.0), ("k", 1.0), ("s0", 1.0)):
        mot.add_argument(f"--{name}", type=float, default=default)
    mot.add_argument("--s-max", type=float, default=1e4, help="scan upper bound")

    disp = sub.add_parser("dispersion", help="tabulate linear growth rates")
    for name, default in (("m", 1.0), ("a", 0.0), ("b", 1.0), ("k", 2.0), ("s0", 1.0)):
        disp.add_argument(f"--{name}", type=float, default=default)
    disp.add_argument("--M", type=float, default=2.0, help="homogeneous density")
    disp.add_argument("--q-max", type=float, default=2.0, help="largest wavenumber")
    disp.add_argument("--points", type=int, default=201, help="wavenumber samples")
    disp.add_argument("--out", help="CSV path (default stdout)")

    sw = sub.add_parser("sweep", help="run a parameter sweep")
    sw.add_argument("--config", required=True, help="INI file with a [sweep] section")
    sw.add_argument("--out-dir", default="sweep_out", help="output directory")
    sw.add_argument("--seed", type=int, default=0, help="seed shared by all points")
    sw.add_argument("--quiet", action="store_true", help="suppress per-point logging")
    return parser


def _cmd_simulate(args) -> int:
    if args.config:
        cfg = load_scenario(args.config)
        if args.preset:
            raise ConfigError("pass either --config or --preset, not both",
                              key="scenario.preset")
    elif args.preset:
        cfg = ScenarioConfig.from_dict({}, args.preset)
    else:
        raise ConfigError("simulate needs --config or --preset", key="scenario")
    summary = run_scenario(
        cfg,
        seed=args.seed,
        out_dir=args.out_dir,
        t_end=args.t_end,
        engine=args.engine,
        quiet=args.quiet,
    )
    if not args.quiet:
        json.dump(summary, sys.stdout, indent=2, sort_keys=True, default=float)
        sys.stdout.write("\n")
    return 0


def _model_from_args(args) -> MotilityModel:
    try:
        return MotilityModel(m=args.m, a=args.a, b=args.b, k=args.k, s0=args.s0)
    except ChemolabError as exc:
        raise ConfigError(f"invalid motility parameters: {exc}", key="model") from exc


def _cmd_analyze_motility(args) -> int:
    model = _model_from_args(args)
    report = analyze(model, s_max=args.s_max)
    json.dump(report.to_dict(), sys.stdout, indent=2, sort_keys=True, default=float)
    sys.stdout.write("\n")
    return 0


def _cmd_dispersion(args) -> int:
    model = _model_from_args(args)
    if args.q_max <= 0.0 or args.points < 2:
        raise ConfigError("dispersion needs q_max > 0 and at least 2 points",
                          key="dispersion")
    qs = np.linspace(0.0, args.q_max, args.points)
    rates = dispersion_curve(model, args.M, qs)
    imax = int(np.argmax(rates))
    positive = qs[rates > 0.0]
    band = (
        f"[{positive.min():.9g}, {positive.max():.9g}]" if positive.size else "empty"
    )
    lines = [
        f"# max_rate={float(rates[imax])!r} at q={float(qs[imax])!r}",
        f"# positive_band={band}",
        "q,rate",
    ]
    lines += [f"{float(q)!r},{float(r)!r}" for q, r in zip(qs, rates)]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_sweep(args) -> int:
    spec = load_sweep(args.config)
    failures, rows = run_sweep(spec, out_dir=args.out_dir, seed=args.seed,
                               quiet=args.quiet)
    done = sum(1 for r in rows if r["status"] == "ok")
    sys.stdout.write(f"sweep finished: {done}/{len(rows)} points ok\n")
    return 1 if failures else 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "analyze-motility":
            return _cmd_analyze_motility(args)
        if args.command == "dispersion":
            return _cmd_dispersion(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        json.dump({"error": "config", "message": str(exc), "key": exc.key}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except ChemolabError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
