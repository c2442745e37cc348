#!/usr/bin/env python3
"""Run the tabular covariate-shift benchmark on every available dataset.

The bundled iris pair always runs.  The other datasets run only when their
source CSVs are supplied; see the dataset registry in xenovert.pipeline for
the expected column names.  Each dataset trains a raw-feature network and a
quantized-feature network on the source side and scores both on the shifted
side, over several seeds.
"""

import argparse
import json
from pathlib import Path

from xenovert.mlp import TrainConfig
from xenovert.pipeline import run_experiment
from xenovert.qtree import XenovertConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--levels", type=int, default=5)
    ap.add_argument("--alpha", type=float, default=1e-3)
    ap.add_argument("--theta", type=float, default=0.99)
    ap.add_argument("--passes", type=int, default=50)
    ap.add_argument("--adapt-passes", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=500)
    ap.add_argument("--batch-size", type=int, default=32)
    ap.add_argument("--plateau-patience", type=int, default=50)
    ap.add_argument("--out", type=Path, default=Path("results/covariate"))
    ap.add_argument("--diabetes-csv", type=Path, default=None)
    ap.add_argument("--abalone-csv", type=Path, default=None)
    ap.add_argument("--iowa-csv", type=Path, default=None)
    ap.add_argument("--mosquito-csv", type=Path, default=None)
    args = ap.parse_args()

    jobs: list[tuple[str, Path | None]] = [("iris", None), ("iris-noshift", None)]
    if args.diabetes_csv:
        jobs.append(("diabetes", args.diabetes_csv))
    if args.abalone_csv:
        jobs.append(("abalone", args.abalone_csv))
        jobs.append(("abalone-noshift", args.abalone_csv))
    if args.iowa_csv:
        jobs.append(("iowa", args.iowa_csv))
    if args.mosquito_csv:
        jobs.append(("mosquito", args.mosquito_csv))

    xcfg = XenovertConfig(
        levels=args.levels, learning_rate=args.alpha, velocity_decay=args.theta
    )
    traincfg = TrainConfig(
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=0.01,
        plateau_patience=args.plateau_patience,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    for name, csv_path in jobs:
        report = run_experiment(
            name,
            xcfg,
            traincfg,
            n_seeds=args.seeds,
            csv_path=str(csv_path) if csv_path else None,
            passes=args.passes,
            adapt_passes=args.adapt_passes,
            normalize_quantized=True,
        )
        for arm in report["arms"]:
            print(
                f"{name:>16} | {arm['name']:>13} | {report['metric']} "
                f"{arm['mean']:.4f} +/- {arm['sd']:.4f}"
            )
        out_path = args.out / f"{name}.json"
        out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"wrote {out_path}")


if __name__ == "__main__":
    main()
