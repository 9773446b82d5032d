#!/usr/bin/env python3
"""Wall-time comparison of one weight update: reverse pass, relaxation,
and the level schedule on the same levelled model and inputs.

Always exits 0; the expected ordering is advisory on shared hardware.
"""

import argparse
import sys
from pathlib import Path

from pcgraph import harness


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="JSON experiment config")
    ap.add_argument("--out", default="results/benchmark.csv")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--repetitions", type=int,
                    help="override the config's sample count")
    args = ap.parse_args(argv)

    cfg = (harness.ExperimentConfig.from_json(args.config)
           if args.config else harness.ExperimentConfig())
    if args.repetitions is not None:
        cfg = harness.ExperimentConfig.from_dict(
            {**cfg.to_dict(), "repetitions": args.repetitions})

    rows, code = harness.run_benchmark(cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    harness.write_rows(rows, out=args.out, fmt=args.format)

    medians = {r["algorithm"]: r["median_s"] for r in rows
               if r["algorithm"] != "ratios"}
    print(f"{args.out}: " + "  ".join(
        f"{name} {medians[name] * 1e6:.0f}us" for name in ("bp", "zil", "il")))
    print(f"ratios: il/zil {medians['il'] / medians['zil']:.1f}x, "
          f"zil/bp {medians['zil'] / medians['bp']:.1f}x")
    return code


if __name__ == "__main__":
    sys.exit(main())
