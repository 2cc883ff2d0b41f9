from __future__ import annotations

import argparse
import json
from pathlib import Path
from typing import List, Optional, Sequence

from penlik_engine.constants import GAMMA_SETTINGS
from penlik_engine.export import to_jsonable
from penlik_engine.sim import dimension_rule, report_tables, run_lr_null_experiment, run_table_experiment
from penlik_engine.types import PenaltySpec


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Run the AR selection study and the LR null study in one batch.")
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400, 800], help="Sample sizes")
    parser.add_argument("--replicates", type=int, default=400, help="Replicates per sample size (default: 400)")
    parser.add_argument("--lr-n", type=int, default=400, help="Sample size of the LR null study (default: 400)")
    parser.add_argument("--lr-replicates", type=int, default=200, help="Replicates of the LR null study")
    parser.add_argument("--penalties", nargs="+", default=["scad", "hard", "soft"], choices=["scad", "hard", "soft"])
    parser.add_argument("--gammas", type=float, nargs="+", default=list(GAMMA_SETTINGS))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--grid-size", type=int, default=50)
    parser.add_argument("--output", default="tables.json", help="Output JSON file")
    parser.add_argument("--csv-dir", default=None, help="Also write table-shaped CSVs here")
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> None:
    args = parse_args(argv)
    runs: List[dict] = []
    for n in args.sizes:
        for kind in args.penalties:
            for gamma in args.gammas:
                report = run_table_experiment(
                    n,
                    args.replicates,
                    PenaltySpec(kind),
                    gamma,
                    args.seed,
                    workers=args.workers,
                    grid_size=args.grid_size,
                )
                runs.append(to_jsonable(report))
                if args.csv_dir:
                    target = Path(args.csv_dir)
                    target.mkdir(parents=True, exist_ok=True)
                    for name, frame in report_tables(report).items():
                        frame.to_csv(target / f"{name}_n{n}_{kind}_g{gamma:g}.csv", index=False, float_format="%.9g")

    payload = {
        "input": {
            "sizes": args.sizes,
            "p_n": {str(n): dimension_rule(n) for n in args.sizes},
            "replicates": args.replicates,
            "penalties": args.penalties,
            "gammas": args.gammas,
            "seed": args.seed,
        },
        "tables": runs,
        "lr_null": to_jsonable(
            run_lr_null_experiment(
                args.lr_n,
                args.lr_replicates,
                PenaltySpec("scad"),
                args.seed,
                workers=args.workers,
                grid_size=args.grid_size,
            )
        ),
    }

    output_path = Path(args.output)
    output_path.write_text(json.dumps(payload, indent=2), encoding="utf-8")


if __name__ == "__main__":
    main()
