#!/usr/bin/env python3
"""Divergence suite: scheduled updates vs the reverse pass, all families.

Writes one row per (model, seed, variant) and exits nonzero if any
expected-exact row diverges or any expected-divergent row does not.
"""

import argparse
import sys
from pathlib import Path

from pcgraph import harness


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="JSON experiment config")
    ap.add_argument("--seed", type=int, help="run a single seed")
    ap.add_argument("--out", default="results/equivalence.csv")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--tolerance", type=float,
                    help="override the zero-divergence tolerance")
    args = ap.parse_args(argv)

    cfg = (harness.ExperimentConfig.from_json(args.config)
           if args.config else harness.ExperimentConfig())
    overrides = {}
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if args.tolerance is not None:
        overrides["tolerance_zero"] = args.tolerance
    if overrides:
        cfg = harness.ExperimentConfig.from_dict(
            {**cfg.to_dict(), **overrides})

    rows, code = harness.run_equivalence_suite(cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    harness.write_rows(rows, out=args.out, fmt=args.format)

    bad = [r for r in rows if not r["ok"]]
    worst = max(r["divergence"] for r in rows if r["expected"] == "zero")
    print(f"{len(rows)} rows -> {args.out}; "
          f"worst expected-zero divergence {worst:.2e}; "
          f"{len(bad)} rows off expectation")
    return code


if __name__ == "__main__":
    sys.exit(main())
