#!/usr/bin/env python3
"""Generate a synthetic monitoring dataset: per-sensor CSVs plus window labels.

The stream cycles through three workload phases with distinct levels and
oscillation patterns, one phase per aggregation window, so the resulting
labels CSV lines up with `cs-smooth sign --window W --step W`.

Example:
    python scripts/make_synthetic_dataset.py --out demo_data --sensors 24 \
        --window 16 --windows-per-class 30
"""

import argparse
from pathlib import Path

import numpy as np

from cs_smooth.synthetic import class_stream


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="dataset directory to create")
    parser.add_argument("--sensors", type=int, default=24)
    parser.add_argument("--window", type=int, default=16, help="samples per phase/window")
    parser.add_argument("--windows-per-class", type=int, default=30)
    parser.add_argument("--interval", type=int, default=1000, help="sample interval in ms")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    segments = []
    labels = []
    n_phases = 3 * args.windows_per_class
    for phase in range(n_phases):
        label = phase % 3
        stream = class_stream(
            label, args.sensors, args.window, seed=args.seed + phase, interval=args.interval
        )
        segments.append(stream.data)
        labels.append((phase * args.window * args.interval, f"phase{label}"))
    data = np.concatenate(segments, axis=1)

    for i in range(args.sensors):
        lines = [
            f"{k * args.interval},{float(v)!r}" for k, v in enumerate(data[i])
        ]
        (out / f"s{i:03d}.csv").write_text("\n".join(lines) + "\n")
    labels_path = out / "labels.csv"
    labels_path.write_text(
        "window_start,label\n" + "\n".join(f"{s},{v}" for s, v in labels) + "\n"
    )
    print(
        f"wrote {args.sensors} sensor CSVs x {data.shape[1]} samples and "
        f"{len(labels)} labels to {out}"
    )
    print(
        f"next: cs-smooth train --dataset {out} --out model.json && "
        f"cs-smooth sign --dataset {out} --model model.json "
        f"--window {args.window} --step {args.window} --blocks 10 --out batch.csv"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
