"""Command-line interface.

Subcommands: run (single scenario), sweep (matrix file), theory (closed-form
curve export), percolate (lattice Monte Carlo), compare (theory vs simulation
join).  Config files are flat key = value text; CLI flags win over file keys.
Exit codes: 0 success, 2 configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, percolation
from .csvio import ConfigError, read_table, write_csv
from .traffic import SimulationError


def _scenario_overrides(args) -> dict[str, str]:
    pairs = {
        "f": args.f, "rho": args.rho, "r": args.r, "grid_n": args.grid_n,
        "regime": args.regime, "dest": args.dest, "rsu": args.rsu,
        "duration": args.duration, "warmup": args.warmup,
        "sample_interval": args.sample_interval,
    }
    if args.seed is not None:
        pairs["seeds"] = args.seed
    if getattr(args, "export_snapshots", False):
        pairs["export_snapshots"] = "1"
    if getattr(args, "export_clusters", False):
        pairs["export_clusters"] = "1"
    return {k: v for k, v in pairs.items() if v is not None}


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", help="replicate seed list, e.g. 1,2,3")
    p.add_argument("--out", help="output directory")
    p.add_argument("--f", help="vehicles/hour per entry lane")
    p.add_argument("--rho", help="market penetration in (0, 1]")
    p.add_argument("--r", help="connectivity range, meters")
    p.add_argument("--grid-n", dest="grid_n", help="grid dimension")
    p.add_argument("--regime", help="NL, SL or GW")
    p.add_argument("--dest", help="anti or random")
    p.add_argument("--rsu", help="none, intersections, midsegment or custom:FILE")
    p.add_argument("--duration", help="simulated seconds")
    p.add_argument("--warmup", help="seconds excluded from aggregates")
    p.add_argument("--sample-interval", dest="sample_interval",
                   help="seconds between connectivity samples")


def cmd_run(args) -> int:
    options = harness.load_options(args.config, _scenario_overrides(args))
    cfg = harness.scenario_from_options(options)
    row = harness.run_scenario(cfg, args.out)
    for name, value in zip(harness.AGGREGATE_HEADER, row.to_row()):
        print(f"{name}: {value}")
    return 0


def cmd_sweep(args) -> int:
    options = harness.load_options(args.config, _scenario_overrides(args))
    cells = harness.expand_matrix(options)
    out_dir = args.out or "sweep_out"
    rows = harness.sweep(cells, out_dir, jobs=int(args.jobs))
    print(f"{len(rows)} cells -> {Path(out_dir) / 'sweep.csv'}")
    return 0


def cmd_theory(args) -> int:
    lams = np.linspace(float(args.lam_min), float(args.lam_max), int(args.steps))
    rows = harness.theory_curve(lams, r=float(args.r), L=float(args.L),
                                rho=float(args.rho), lattice_n=int(args.lattice_n),
                                lattice_trials=int(args.trials), seed=int(args.seed))
    meta = {"r": args.r, "L": args.L, "rho": args.rho,
            "lattice_n": args.lattice_n, "trials": args.trials}
    write_csv(args.out, harness.THEORY_HEADER, rows, meta)
    lam_lo, lam_hi = percolation.predict_transition_density(
        float(args.L), float(args.r), float(args.rho))
    print(f"wrote {args.out}; transition density bracket "
          f"[{lam_lo:.6f}, {lam_hi:.6f}] veh/m")
    return 0


def cmd_percolate(args) -> int:
    ps = np.linspace(float(args.p_min), float(args.p_max), int(args.steps))
    rows = []
    for n in (int(x) for x in args.n.split(",")):
        for p in ps:
            cfg = percolation.LatticePercolation(n=n, p=float(p),
                                                 trials=int(args.trials),
                                                 seed=int(args.seed))
            rows.append([n, float(p), percolation.lattice_theta(cfg)])
    write_csv(args.out, ["n", "p", "theta"], rows,
              {"trials": args.trials, "seed": args.seed})
    print(f"wrote {args.out}")
    return 0


def cmd_compare(args) -> int:
    rows = [harness.AggregateRow.from_strings(rec) for rec in read_table(args.rows)]
    report, summary = harness.compare_to_theory(
        rows, lattice_n=int(args.lattice_n), lattice_trials=int(args.trials),
        seed=int(args.seed))
    write_csv(args.out, harness.COMPARE_HEADER, report, {"rows": args.rows})
    for key, value in summary.items():
        print(f"{key}: {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vanetlab",
                                     description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single scenario")
    _add_scenario_flags(p_run)
    p_run.add_argument("--export-snapshots", action="store_true",
                       help="write per-sample vehicle snapshot CSV")
    p_run.add_argument("--export-clusters", action="store_true",
                       help="write per-sample cluster membership CSV")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario matrix")
    _add_scenario_flags(p_sweep)
    p_sweep.add_argument("--jobs", default="1", help="parallel worker processes")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_theory = sub.add_parser("theory", help="export closed-form curves")
    p_theory.add_argument("--r", default="100")
    p_theory.add_argument("--L", default="400")
    p_theory.add_argument("--rho", default="1.0")
    p_theory.add_argument("--lam-min", dest="lam_min", default="0.001")
    p_theory.add_argument("--lam-max", dest="lam_max", default="0.08")
    p_theory.add_argument("--steps", default="40")
    p_theory.add_argument("--lattice-n", dest="lattice_n", default="64")
    p_theory.add_argument("--trials", default="60")
    p_theory.add_argument("--seed", default="0")
    p_theory.add_argument("--out", default="theory.csv")
    p_theory.set_defaults(fn=cmd_theory)

    p_perc = sub.add_parser("percolate", help="lattice percolation Monte Carlo")
    p_perc.add_argument("--n", default="64", help="lattice side(s), comma separated")
    p_perc.add_argument("--p-min", dest="p_min", default="0.3")
    p_perc.add_argument("--p-max", dest="p_max", default="0.7")
    p_perc.add_argument("--steps", default="17")
    p_perc.add_argument("--trials", default="200")
    p_perc.add_argument("--seed", default="0")
    p_perc.add_argument("--out", default="percolation.csv")
    p_perc.set_defaults(fn=cmd_percolate)

    p_cmp = sub.add_parser("compare", help="join NL-A sweep rows against theory")
    p_cmp.add_argument("--rows", required=True, help="sweep.csv or aggregate.csv")
    p_cmp.add_argument("--lattice-n", dest="lattice_n", default="64")
    p_cmp.add_argument("--trials", default="60")
    p_cmp.add_argument("--seed", default="0")
    p_cmp.add_argument("--out", default="compare.csv")
    p_cmp.set_defaults(fn=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":   # pragma: no cover
    sys.exit(main())
