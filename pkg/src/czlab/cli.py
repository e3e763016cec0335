"""Command-line entry point: ``czlab <experiment> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import DEFAULT_CELLS, EXPERIMENTS, ExperimentReport, curve_to_json, run_experiment

CELL_SCALED = ("decay-sharpness", "lp-growth", "weak-type-failure", "llogl-failure")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="czlab", description="Run numerical experiments on sampled 1-D operators.")
    ap.add_argument("experiment", choices=[*EXPERIMENTS, "all"])
    ap.add_argument("--cells", type=int, default=DEFAULT_CELLS,
                    help="grid cells for the large-grid experiments (default %(default)s)")
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--radius", type=float, default=1e4, help="largest truncation radius R")
    ap.add_argument("--eps", type=float, default=0.1, help="contour radius")
    ap.add_argument("--contour-points", type=int, default=32)
    ap.add_argument("--out", type=Path, default=None, help="directory for curves and summary.json")
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    ap.add_argument("--seed", type=int, default=0)
    return ap


def params_for(name: str, args: argparse.Namespace) -> dict:
    p: dict = {}
    if name in CELL_SCALED:
        p["cells"] = args.cells
    if name in ("weak-type-failure", "llogl-failure"):
        p.update(delta=args.delta, p=args.p)
    if name == "weak-type-failure":
        p["radius"] = args.radius
    if name == "llogl-failure":
        p["alphas"] = tuple(args.alpha)
    if name == "conjugation-check":
        p.update(eps=args.eps, m=args.contour_points)
    if name == "pointwise-sharp":
        p["seed"] = args.seed
    return p


def write_outputs(reports: list[ExperimentReport], out: Path, fmt: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for rep in reports:
        d = out / rep.name
        d.mkdir(exist_ok=True)
        for cname, curve in sorted(rep.curves.items()):
            if fmt == "csv":
                (d / f"{cname}.csv").write_text(curve.to_csv())
            else:
                (d / f"{cname}.json").write_text(json.dumps(curve_to_json(curve), sort_keys=True))
    summary = {rep.name: rep.summary() for rep in reports}
    summary["all_passed"] = all(r.passed for r in reports)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, allow_nan=False) + "\n")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    names = list(EXPERIMENTS) if args.experiment == "all" else [args.experiment]
    reports = []
    for name in names:
        rep = run_experiment(name, params_for(name, args))
        reports.append(rep)
        for clause, ok in rep.clauses.items():
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {clause}")
        print(f"{name}: {'passed' if rep.passed else 'FAILED'} in {rep.wall_time:.2f} s")
    if args.out is not None:
        write_outputs(reports, args.out, args.format)
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
