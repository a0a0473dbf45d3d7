"""Published per-sensor baseline signature methods used for comparison.

All three summarize each sensor row independently on raw window data, so the
signature length grows with the sensor count: statistical indicators (tuncer,
11 per row), distribution percentiles (bodik, 9 per row), or a mean-filter
sub-sampling of the row itself (lan, one value per retained sample).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Window
from .errors import DegenerateInputError, InvalidParameterError

TUNCER_PER_ROW = 11
BODIK_PER_ROW = 9

_TUNCER_PERCENTILES = (5.0, 25.0, 50.0, 75.0, 95.0)
_BODIK_PERCENTILES = (5.0, 25.0, 35.0, 50.0, 65.0, 75.0, 95.0)


@dataclass(frozen=True)
class BaselineSignature:
    """Flat per-row feature vector plus the producing method's name."""

    values: np.ndarray
    method: str
    window_start: int = 0
    window_end: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


def _sorted_percentiles(rows: np.ndarray, qs: tuple[float, ...]) -> np.ndarray:
    # Linear interpolation between closest ranks, from an explicit sort so the
    # per-row cost is the documented O(w log w).
    ordered = np.sort(rows, axis=1)
    w = rows.shape[1]
    out = np.empty((rows.shape[0], len(qs)))
    for j, q in enumerate(qs):
        pos = q / 100.0 * (w - 1)
        lo = int(np.floor(pos))
        hi = min(lo + 1, w - 1)
        frac = pos - lo
        out[:, j] = ordered[:, lo] + frac * (ordered[:, hi] - ordered[:, lo])
    return out


def tuncer_signature(window: Window) -> BaselineSignature:
    """Eleven statistical indicators per row, concatenated in row order.

    Per row: mean, population std, min, max, percentiles 5/25/50/75/95, sum of
    changes, absolute sum of changes. Length 11n.
    """
    rows = window.values
    if rows.shape[1] < 2:
        raise DegenerateInputError("tuncer signatures need windows of >= 2 samples")
    diffs = np.diff(rows, axis=1)
    feats = np.column_stack(
        [
            rows.mean(axis=1),
            rows.std(axis=1),
            rows.min(axis=1),
            rows.max(axis=1),
            _sorted_percentiles(rows, _TUNCER_PERCENTILES),
            diffs.sum(axis=1),
            np.abs(diffs).sum(axis=1),
        ]
    )
    return BaselineSignature(
        values=feats.ravel(),
        method="tuncer",
        window_start=window.start,
        window_end=window.end,
    )


def bodik_signature(window: Window) -> BaselineSignature:
    """Min, max and seven percentiles per row, concatenated. Length 9n."""
    rows = window.values
    feats = np.column_stack(
        [
            rows.min(axis=1),
            rows.max(axis=1),
            _sorted_percentiles(rows, _BODIK_PERCENTILES),
        ]
    )
    return BaselineSignature(
        values=feats.ravel(),
        method="bodik",
        window_start=window.start,
        window_end=window.end,
    )


def lan_signature(window: Window, subsample_len: int) -> BaselineSignature:
    """Mean-filter each row down to ``subsample_len`` values, concatenated.

    Rows split into contiguous chunks whose sizes differ by at most one,
    larger chunks first; each chunk is replaced by its mean. Length n * subsample_len.
    """
    rows = window.values
    w = rows.shape[1]
    if not (1 <= subsample_len <= w):
        raise InvalidParameterError(
            f"subsample length must be in [1, {w}], got {subsample_len}"
        )
    chunks = np.array_split(rows, subsample_len, axis=1)
    feats = np.column_stack([c.mean(axis=1) for c in chunks])
    return BaselineSignature(
        values=feats.ravel(),
        method="lan",
        window_start=window.start,
        window_end=window.end,
    )
