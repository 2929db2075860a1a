"""Command-line interface: run experiments, fit scaling laws, query oracles.

Fitted numbers print as ``repr`` floats, matching the values written to
``fits.csv`` byte for byte so downstream tooling can compare annotations
exactly.  Any invariant breach (bad config, degenerate fit input, diverged
run) exits nonzero.
"""

from __future__ import annotations

import argparse
import sys

from . import oracles
from .experiments import (ConfigError, ExperimentConfig, fit_power_law,
                          fit_shot_scaling, read_summary, run_experiment)
from .pauli import PauliSum, heisenberg, tfim


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vqnhe")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output root (default: env or cwd)")
    p_run.add_argument("--workers", type=int, default=1)

    p_fit = sub.add_parser("fit", help="fit a scaling law to a summary CSV")
    p_fit.add_argument("summary")
    p_fit.add_argument("--kind", choices=("shots", "power"), required=True)
    p_fit.add_argument("--strategy", default=None,
                       help="restrict to one strategy label")

    p_or = sub.add_parser("oracle", help="ground-truth queries")
    orsub = p_or.add_subparsers(dest="oracle_command", required=True)
    p_ge = orsub.add_parser("ground-energy")
    p_ge.add_argument("--tfim", type=int, default=None, metavar="N")
    p_ge.add_argument("--heisenberg", type=int, default=None, metavar="N")
    p_ge.add_argument("--file", default=None)
    p_oq = orsub.add_parser("one-qubit")
    p_oq.add_argument("--channel", choices=("depolarizing", "amplitude_damping"),
                      required=True)
    p_oq.add_argument("--strength", type=float, required=True)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "run":
        cfg = ExperimentConfig.from_file(args.config)
        out = run_experiment(cfg, output_root=args.out, workers=args.workers)
        print(out)
        return 0
    if args.command == "fit":
        return _fit(args)
    if args.oracle_command == "ground-energy":
        if args.tfim:
            h = tfim(args.tfim)
        elif args.heisenberg:
            h = heisenberg(args.heisenberg)
        elif args.file:
            with open(args.file) as fh:
                h = PauliSum.parse(fh.read())
        else:
            raise ValueError("give one of --tfim, --heisenberg, --file")
        print(repr(oracles.exact_ground_energy(h)))
        return 0
    rec = oracles.one_qubit_closed_forms(args.channel, args.strength)
    for name in ("e_baseline", "e_neural", "e_joint", "r_neural", "r_joint",
                 "theta_joint"):
        print(f"{name}={getattr(rec, name)!r}")
    for scen in ("baseline", "neural", "joint"):
        dx, dz = getattr(rec, f"dev_{scen}")
        print(f"dev_{scen}_x={dx!r}")
        print(f"dev_{scen}_z={dz!r}")
    return 0


def _fit(args) -> int:
    rows = read_summary(args.summary)
    if args.strategy:
        rows = [r for r in rows if r["strategy"] == args.strategy]
    if not rows:
        raise ValueError("no matching rows in summary")
    by_strategy: dict = {}
    for r in rows:
        by_strategy.setdefault(r["strategy"], []).append(r)
    for strat in sorted(by_strategy):
        grp = by_strategy[strat]
        if args.kind == "shots":
            pts = [(float(r["M"]), float(r["mean_delta_e"])) for r in grp]
            a, b = fit_shot_scaling(pts)
            print(f"kind=shots strategy={strat} a={a!r} b={b!r}")
        else:
            pts = [(float(r["p_eff"]), float(r["mean_delta_e"])) for r in grp]
            pts = [(x, y) for x, y in pts if x > 0]
            a, b = fit_power_law(pts)
            print(f"kind=power strategy={strat} a={a!r} b={b!r}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
