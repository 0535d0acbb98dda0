"""Simulate a few sequences, track them, score them and print motion statistics, all through the CLI."""

import argparse
import tempfile
from pathlib import Path

from smotkit.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", help="keep outputs here instead of a temporary directory")
    ap.add_argument("--sequences", type=int, default=3)
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(args.workdir or tmp)
        data, pred = root / "data", root / "pred"
        spec = root / "scenario.cfg"
        root.mkdir(parents=True, exist_ok=True)
        spec.write_text(
            "n_targets = 6\nn_crossing_pairs = 2\nn_frames = 150\nmotion_model = ema-turn\n"
            "speed_jitter = 0.3\nnoise_std = 1.0\ndropout = 0.1\nlow_fraction = 0.1\n"
        )
        for seed in range(args.sequences):
            cli(["simulate", "--spec", str(spec), "--seed", str(seed), "--name", f"sim{seed:02d}", "--out", str(data)])
        cli(["track", "--dets", str(data), "--out", str(pred)])
        cli(["eval", "--gt", str(data), "--pred", str(pred)])
        print()
        cli(["analyze", "velocity", "--gt", str(data), "--window", "1..5"])
        print()
        cli(["analyze", "iou-methods", "--gt", str(data)])


if __name__ == "__main__":
    main()
