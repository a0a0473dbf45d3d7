#!/usr/bin/env python3
"""Sweep signature block counts and report compression fidelity for each.

Trains a model on the dataset, computes sliding-window signatures at every
requested block count and prints the divergence of the signature set from the
data it compressed (lower is better, 0 = indistinguishable up to binning).

Example:
    python scripts/fidelity_sweep.py --dataset demo_data --window 16 --step 1 \
        --blocks 5,10,20
"""

import argparse

from cs_smooth.core import WindowSpec, align, infer_grid, load_dataset_dir
from cs_smooth.cs import train
from cs_smooth.fidelity import fidelity_components


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", required=True)
    parser.add_argument("--window", type=int, required=True, help="window length, samples")
    parser.add_argument("--step", type=int, default=1, help="window step, samples")
    parser.add_argument("--blocks", default="5,10,20", help="comma-separated block counts")
    parser.add_argument("--bins", type=int, default=40)
    parser.add_argument("--interval", type=int, default=None)
    args = parser.parse_args()

    series = load_dataset_dir(args.dataset)
    matrix = align(series, infer_grid(series, interval=args.interval))
    model = train(matrix)
    spec = WindowSpec(args.window, args.step)
    print(f"dataset: {matrix.n_sensors} sensors x {matrix.n_samples} samples")
    print(f"{'blocks':>8} {'js_real':>9} {'js_imag':>9} {'js_mean':>9}")
    for token in args.blocks.split(","):
        n_blocks = int(token)
        comp = fidelity_components(matrix, model, spec, n_blocks, bins=args.bins)
        print(
            f"{n_blocks:>8} {comp.js_real:>9.4f} {comp.js_imag:>9.4f} {comp.js_mean:>9.4f}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
