"""AUC and parity of noisy vs corrected labels at several noise rates on group A.

    python3 scripts/noise_rates.py --rates 0.05 0.1 0.2 --seeds 5
"""

import argparse

import numpy as np

from gflc.benchmark import BenchmarkSetup, run_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rates", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    print(f"{'rate':>5} {'auc noisy':>10} {'auc corr':>9} {'dp noisy':>9} {'dp corr':>8} {'restored':>9}")
    for rate in args.rates:
        outcomes = [run_seed(s, BenchmarkSetup(noise_rate=rate)) for s in range(args.seeds)]
        mean = lambda xs: float(np.mean([x for x in xs if x is not None]))
        print(
            f"{rate:5.2f} {mean(o.report.auc_noisy for o in outcomes):10.4f} "
            f"{mean(o.report.auc_corrected for o in outcomes):9.4f} "
            f"{mean(o.dp_noisy for o in outcomes):9.3f} {mean(o.dp_corrected for o in outcomes):8.3f} "
            f"{mean(o.report.restoration_accuracy for o in outcomes):9.3f}"
        )


if __name__ == "__main__":
    main()
