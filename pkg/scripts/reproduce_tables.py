"""CLI: Run the published simulation grids and write a results CSV.

Usage:
    python scripts/reproduce_tables.py table1 [--reps 1000] [--jobs 4] [--out results/table1.csv]
    python scripts/reproduce_tables.py bandwidth --reps 200

Grids:
    table1 .. table10  one study each (H11, H12, H21, H22, H31, H32, H33, H34, H41, H42)
    bandwidth          H11, n=400, q=17 at c in {0.5, 0.8, 1, 1.2, 1.5}
    split              H11, n=400, q=17 at n2 in {0.5n, 0.25n, 0.1n}
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from costtest.config import settings  # noqa: E402
from costtest.log import configure_logging  # noqa: E402
from costtest.schemas.options import SplitOptions, WeightSpec  # noqa: E402
from costtest.schemas.study import StudyConfig  # noqa: E402
from costtest.services.datasets import ResultsTable  # noqa: E402
from costtest.services.harness import run_grid  # noqa: E402

# (n, q) columns shared by Studies 1 and 3.
STANDARD_CELLS = [(100, 2), (100, 4), (100, 6), (100, 8), (200, 12), (400, 17), (600, 20)]
# (n, p) columns of Study 4.
BLOCK_CELLS = [(100, 2), (100, 4), (100, 6), (100, 8), (200, 12), (400, 17), (600, 20)]

BANDWIDTH_CONSTANTS = [0.5, 0.8, 1.0, 1.2, 1.5]
SPLIT_FRACTIONS = [0.5, 0.25, 0.1]


def _cells(study: str, cells, departures, sigmas, **common) -> list[StudyConfig]:
    return [
        StudyConfig(study=study, n=n, q=q, a=a, sigma_kind=sigma, **common)
        for sigma in sigmas
        for n, q in cells
        for a in departures
    ]


def _block_cells(study: str, departures, sigmas, **common) -> list[StudyConfig]:
    configs = []
    for sigma in sigmas:
        for q_rule in ("p_squared", "n"):
            for n, p in BLOCK_CELLS:
                q = p * p if q_rule == "p_squared" else n
                configs += [
                    StudyConfig(study=study, n=n, q=q, p=p, a=a, sigma_kind=sigma, **common)
                    for a in departures
                ]
    return configs


def build_grid(name: str, **common) -> list[StudyConfig]:
    both = ("identity", "ar_half")
    match name:
        case "table1":
            return _cells("H11", STANDARD_CELLS, [0.0, 0.25], both, **common)
        case "table2":
            return _cells("H12", STANDARD_CELLS, [0.0, 0.1], both, **common)
        case "table3":
            cells = [(50, 5), (100, 10), (500, 50), (1000, 100)]
            return _cells("H21", cells, [0.0, 0.1], both, **common)
        case "table4":
            return _cells("H22", [(100, 10), (400, 20), (900, 30)], [0.0, 0.5], both, **common)
        case "table5":
            return _cells("H31", STANDARD_CELLS, [0.0, 0.1], both, **common)
        case "table6":
            return _cells("H32", STANDARD_CELLS, [0.0, 0.1], both, **common)
        case "table7":
            return _cells("H33", STANDARD_CELLS, [0.0, 0.5], both, **common)
        case "table8":
            return _cells("H34", STANDARD_CELLS[1:], [0.0, 0.5], both, **common)
        case "table9":
            return _block_cells("H41", [0.0, 0.25], both, **common)
        case "table10":
            return _block_cells("H42", [0.0, 0.25], both, **common)
        case "bandwidth":
            return [
                StudyConfig(study="H11", n=400, q=17, a=a, weight=WeightSpec(c=c), **common)
                for c in BANDWIDTH_CONSTANTS
                for a in (0.0, 0.25)
            ]
        case "split":
            return [
                StudyConfig(
                    study="H11", n=400, q=17, a=a, split=SplitOptions(fraction_n2=f), **common
                )
                for f in SPLIT_FRACTIONS
                for a in (0.0, 0.25)
            ]
    raise ValueError(f"unknown grid {name!r}")


GRIDS = [f"table{i}" for i in range(1, 11)] + ["bandwidth", "split"]


def main():
    parser = argparse.ArgumentParser(description="Reproduce the simulation tables")
    parser.add_argument("grid", choices=GRIDS)
    parser.add_argument("--reps", type=int, default=1000, help="Replications per cell")
    parser.add_argument("--seed", type=int, default=20240101)
    parser.add_argument("--jobs", type=int, default=None, help="joblib workers (default N_JOBS)")
    parser.add_argument("--out", type=str, help="Results CSV (default OUTPUT_DIR/<grid>.csv)")
    args = parser.parse_args()

    configure_logging()
    configs = build_grid(args.grid, reps=args.reps, seed=args.seed)
    out = Path(args.out) if args.out else Path(settings.OUTPUT_DIR) / f"{args.grid}.csv"

    print(f"Running {len(configs)} cells of {args.grid} ({args.reps} reps each) -> {out}")
    table = ResultsTable(out)
    for result in run_grid(configs, n_jobs=args.jobs):
        table.append(result.as_row())
        cfg = result.config
        print(
            f"  {cfg.study} n={cfg.n} q={cfg.q} p={result.p} a={cfg.a:g} {cfg.sigma_kind}: "
            f"{result.rejection_rate:.3f}"
        )
    print(f"Done: {table.rows} rows")


if __name__ == "__main__":
    main()
