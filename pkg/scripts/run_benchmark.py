"""Multi-seed directional benchmark: noisy vs corrected training labels.

    python3 scripts/run_benchmark.py --seeds 10 --out results/benchmark.json
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from gflc.benchmark import BenchmarkSetup, run_seed
from gflc.config import PipelineConfig
from gflc.evaluation import aggregate_reports


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--noise-rate", type=float, default=0.2)
    ap.add_argument("--config", type=Path, help="PipelineConfig JSON")
    ap.add_argument("--group-as-feature", action="store_true")
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    config = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    if args.group_as_feature:
        config = config.replace(group_as_feature=True)
    setup = BenchmarkSetup(noise_rate=args.noise_rate)

    start = time.perf_counter()
    outcomes = []
    print(f"{'seed':>4} {'dp noisy':>9} {'dp corr':>8} {'pprev n':>8} {'pprev c':>8} {'auc n':>7} {'auc c':>7} {'flips':>6}")
    for seed in range(args.seeds):
        o = run_seed(seed, setup, config)
        outcomes.append(o)
        print(
            f"{seed:>4} {o.dp_noisy:9.3f} {o.dp_corrected:8.3f} {o.pprev_noisy:8.3f} {o.pprev_corrected:8.3f} "
            f"{o.report.auc_noisy:7.4f} {o.report.auc_corrected:7.4f} {o.report.corrections:6d}"
        )
    gains = [o.auc_gain for o in outcomes]
    print(f"dp improved: {sum(o.dp_corrected >= o.dp_noisy for o in outcomes)}/{len(outcomes)}")
    print(f"pprev@0.5 not worse: {sum(o.pprev_corrected >= o.pprev_noisy for o in outcomes)}/{len(outcomes)}")
    print(f"auc within 0.01: {sum(g >= -0.01 for g in gains)}/{len(outcomes)}, median gain {np.median(gains):+.5f}")
    print(f"{time.perf_counter() - start:.1f}s")

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        doc = {
            "config": config.to_dict(),
            "setup": setup.__dict__,
            "seeds": [o.row() for o in outcomes],
            "aggregate": aggregate_reports([o.report for o in outcomes]),
        }
        args.out.write_text(json.dumps(doc, indent=2, sort_keys=True, default=list) + "\n")


if __name__ == "__main__":
    main()
