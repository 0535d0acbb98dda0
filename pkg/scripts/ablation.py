"""Run the component ablation on the fixed 20-scenario synthetic suite and print the table."""

import argparse
import time

from smotkit.experiments import run_ablation
from smotkit.sim import benchmark_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenarios", type=int, default=20, help="number of suite seeds to use (default 20)")
    args = ap.parse_args()
    t0 = time.perf_counter()
    res = run_ablation(benchmark_suite(args.scenarios))
    print(f"{'config':<12} {'SO-HOTA':>8} {'ID sw.':>7}")
    for name, hota, sw in res.rows():
        print(f"{name:<12} {hota:>8.3f} {sw:>7d}")
    print(f"strictly increasing: {res.strictly_increasing()}")
    print(f"ID-switch reduction vs plain: {100 * res.switch_reduction():.1f}%")
    print(f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
