import numpy as np
import pytest


@pytest.fixture
def write_dataset(tmp_path):
    """Write a matrix as a directory of per-sensor CSV files; returns the dir."""

    def _write(data, interval=1000, start=0, subdir="dataset"):
        data = np.asarray(data, dtype=float)
        root = tmp_path / subdir
        root.mkdir(parents=True, exist_ok=True)
        for i, row in enumerate(data):
            lines = [
                f"{start + k * interval},{float(value)!r}" for k, value in enumerate(row)
            ]
            (root / f"s{i:03d}.csv").write_text("\n".join(lines) + "\n")
        return root

    return _write
