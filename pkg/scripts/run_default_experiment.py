#!/usr/bin/env python3
"""Run the desk-scale selection experiment and write runs + summary CSVs."""

import argparse
import sys
import time

from eusearch.experiment import (
    ExperimentConfig,
    load_experiment_config,
    run_experiment,
    summarize,
    summary_csv_text,
    summary_table,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None, help="experiment config YAML")
    parser.add_argument("--out", default="runs.csv")
    parser.add_argument("--summary", default="summary.csv")
    args = parser.parse_args()

    cfg = load_experiment_config(args.config) if args.config else ExperimentConfig()
    t0 = time.time()
    report = run_experiment(
        cfg,
        csv_path=args.out,
        progress=lambda msg: print(f"[{time.time() - t0:6.0f}s] {msg}", file=sys.stderr),
    )
    summary = summarize(report)
    print(summary_table(summary))
    with open(args.summary, "w", encoding="utf-8") as fh:
        fh.write(summary_csv_text(summary))
    print(f"\nwrote {args.out} and {args.summary} in {time.time() - t0:.0f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
