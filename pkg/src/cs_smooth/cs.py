"""Correlation-wise smoothing: training, sorting, smoothing, persistence.

The method compresses an n x w window of sensor readings into l complex-valued
blocks. Training learns a correlation-driven row ordering plus per-sensor
min-max bounds (the reusable model); each signature is then the per-block mean
of the normalized, reordered window (real part) and of its backward first
differences (imaginary part).
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .core import SensorMatrix, Window
from .errors import (
    DegenerateInputError,
    DimensionError,
    FormatError,
    InvalidBlockCountError,
    InvalidParameterError,
    ModelIncompatibilityError,
    UnsupportedVersionError,
)

MODEL_VERSION = "v1"


@dataclass(frozen=True)
class CorrelationStats:
    """Shifted Pearson coefficients: pairwise matrix in [0,2], per-row means.

    The shift by +1 keeps coefficients non-negative; a row's global
    coefficient is the mean shifted correlation against all other rows and
    measures how descriptive the sensor is of overall system state.
    """

    pairwise: np.ndarray
    global_coeffs: np.ndarray


@dataclass(frozen=True)
class CSModel:
    """Reusable training product: row permutation plus normalization bounds."""

    sensor_ids: tuple[str, ...]
    permutation: np.ndarray
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    version: str = MODEL_VERSION

    def __post_init__(self):
        object.__setattr__(self, "sensor_ids", tuple(self.sensor_ids))
        perm = np.asarray(self.permutation, dtype=np.int64)
        lo = np.asarray(self.lower_bounds, dtype=np.float64)
        hi = np.asarray(self.upper_bounds, dtype=np.float64)
        n = len(self.sensor_ids)
        if sorted(perm.tolist()) != list(range(n)):
            raise FormatError("permutation is not a bijection on the sensor rows")
        if lo.shape != (n,) or hi.shape != (n,):
            raise FormatError("bounds length does not match sensor count")
        if np.any(lo > hi):
            raise FormatError("lower bound exceeds upper bound")
        for name, arr in (("permutation", perm), ("lower_bounds", lo), ("upper_bounds", hi)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_ids)

    @functools.cached_property
    def model_id(self) -> str:
        digest = hashlib.sha256(_model_json(self).encode("utf-8")).hexdigest()
        return digest[:12]

    def __eq__(self, other) -> bool:
        if not isinstance(other, CSModel):
            return NotImplemented
        return (
            self.version == other.version
            and self.sensor_ids == other.sensor_ids
            and np.array_equal(self.permutation, other.permutation)
            and np.array_equal(self.lower_bounds, other.lower_bounds)
            and np.array_equal(self.upper_bounds, other.upper_bounds)
        )


@dataclass(frozen=True)
class BlockLayout:
    """The l block ranges over n sensors, 1-based inclusive (first, last).

    Adjacent blocks may share one boundary sensor; together they cover all n
    rows when produced by :func:`block_layout`.
    """

    n_sensors: int
    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "ranges", tuple((int(b), int(e)) for b, e in self.ranges)
        )
        for b, e in self.ranges:
            if not (1 <= b <= e <= self.n_sensors):
                raise InvalidBlockCountError(
                    f"block range ({b},{e}) outside [1,{self.n_sensors}]"
                )

    @property
    def n_blocks(self) -> int:
        return len(self.ranges)


@dataclass(frozen=True)
class Signature:
    """l complex-valued blocks summarizing one window.

    Real parts are window-averaged normalized values in [0,1]; imaginary parts
    are window-averaged first differences of the normalized rows in [-1,1].
    """

    blocks_real: np.ndarray
    blocks_imag: np.ndarray
    layout: BlockLayout
    window_start: int = 0
    window_end: int = 0
    model_id: str = ""

    def __post_init__(self):
        re = np.asarray(self.blocks_real, dtype=np.float64)
        im = np.asarray(self.blocks_imag, dtype=np.float64)
        if re.shape != im.shape or re.shape != (self.layout.n_blocks,):
            raise DimensionError(
                f"block vectors must both have length {self.layout.n_blocks}"
            )
        re.flags.writeable = False
        im.flags.writeable = False
        object.__setattr__(self, "blocks_real", re)
        object.__setattr__(self, "blocks_imag", im)

    @property
    def n_blocks(self) -> int:
        return self.layout.n_blocks


def pairwise_correlation(matrix: SensorMatrix) -> CorrelationStats:
    """Shifted Pearson correlation between all row pairs, plus row means.

    Uses population covariance/deviations; a zero-variance row correlates 1
    (shifted) with everything, i.e. raw correlation 0. The diagonal is exactly
    2. For a single row the global coefficient is 2 by convention. O(n^2 t).
    """
    if matrix.n_samples < 2:
        raise DegenerateInputError("need at least 2 samples to correlate rows")
    pairwise = _shifted_correlation(matrix.data)
    n = matrix.n_sensors
    if n == 1:
        global_coeffs = np.array([2.0])
    else:
        global_coeffs = (pairwise.sum(axis=1) - 2.0) / (n - 1)
    return CorrelationStats(pairwise=pairwise, global_coeffs=global_coeffs)


def _shifted_correlation(data: np.ndarray) -> np.ndarray:
    t = data.shape[1]
    centered = data - data.mean(axis=1, keepdims=True)
    cov = (centered @ centered.T) / t
    sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    flat = sd == 0.0
    denom = np.where(flat, 1.0, sd)
    corr = cov / np.outer(denom, denom)
    corr[flat, :] = 0.0
    corr[:, flat] = 0.0
    shifted = np.clip(corr, -1.0, 1.0) + 1.0
    np.fill_diagonal(shifted, 2.0)
    return shifted


def train(matrix: SensorMatrix) -> CSModel:
    """Learn a row permutation and min-max bounds from historical data.

    The permutation starts at the row with the highest global coefficient and
    greedily appends the remaining row maximizing (correlation with the last
    appended row) x (global coefficient); ties go to the lowest original row
    index. Dominated by the correlation matrix, O(n^2 t).
    """
    stats = pairwise_correlation(matrix)
    perm = _greedy_order(stats.pairwise, stats.global_coeffs)
    return CSModel(
        sensor_ids=matrix.sensor_ids,
        permutation=perm,
        lower_bounds=matrix.data.min(axis=1),
        upper_bounds=matrix.data.max(axis=1),
    )


def _greedy_order(pairwise: np.ndarray, global_coeffs: np.ndarray) -> np.ndarray:
    n = len(global_coeffs)
    available = np.ones(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    current = int(np.argmax(global_coeffs))
    order[0] = current
    available[current] = False
    for k in range(1, n):
        scores = pairwise[:, current] * global_coeffs
        scores[~available] = -np.inf
        current = int(np.argmax(scores))
        order[k] = current
        available[current] = False
    return order


def _check_window_sensors(window: Window, model: CSModel) -> None:
    if window.sensor_ids == model.sensor_ids:
        return
    missing = set(model.sensor_ids) - set(window.sensor_ids)
    extra = set(window.sensor_ids) - set(model.sensor_ids)
    if missing or extra:
        raise ModelIncompatibilityError(
            f"window sensors do not match model: missing={sorted(missing)} "
            f"extra={sorted(extra)}"
        )
    raise ModelIncompatibilityError(
        "window sensors match the model but are ordered differently"
    )


def sort_normalize(window: Window, model: CSModel) -> tuple[np.ndarray, np.ndarray]:
    """Min-max normalize, differentiate, and reorder a window's rows.

    Returns (normalized matrix, derivative matrix), both with rows in model
    permutation order. Values are clamped to [0,1]; rows whose training bounds
    collapse map to 0. Derivatives are backward differences of the normalized
    rows; the first column differences against the sample preceding the window
    when available and is 0 otherwise.
    """
    _check_window_sensors(window, model)
    lo = model.lower_bounds[:, None]
    span = (model.upper_bounds - model.lower_bounds)[:, None]
    flat = span[:, 0] == 0.0
    denom = np.where(flat[:, None], 1.0, span)
    normalized = np.clip((window.values - lo) / denom, 0.0, 1.0)
    normalized[flat, :] = 0.0
    if window.preceding is not None:
        prev = np.clip((window.preceding - lo[:, 0]) / denom[:, 0], 0.0, 1.0)
        prev[flat] = 0.0
        first = normalized[:, :1] - prev[:, None]
    else:
        first = np.zeros((normalized.shape[0], 1))
    derivative = np.concatenate([first, np.diff(normalized, axis=1)], axis=1)
    p = model.permutation
    return normalized[p], derivative[p]


def block_layout(n_sensors: int, n_blocks: int) -> BlockLayout:
    """Partition n sensor rows into l blocks of near-equal size.

    Block i (1-based) spans rows 1 + floor((i-1)*n/l) .. ceil(i*n/l); adjacent
    blocks overlap by at most one row and sizes differ by at most one.
    """
    if not (1 <= n_blocks <= n_sensors):
        raise InvalidBlockCountError(
            f"block count must be in [1, {n_sensors}], got {n_blocks}"
        )
    return BlockLayout(n_sensors=n_sensors, ranges=_block_ranges(n_sensors, n_blocks))


def _block_ranges(n: int, l: int) -> tuple[tuple[int, int], ...]:
    return tuple(
        (1 + (i - 1) * n // l, math.ceil(i * n / l)) for i in range(1, l + 1)
    )


def smooth(
    sorted_values: np.ndarray,
    sorted_derivs: np.ndarray,
    layout: BlockLayout,
    *,
    window_start: int = 0,
    window_end: int = 0,
    model_id: str = "",
) -> Signature:
    """Average each block's rows over the whole window, for values and derivatives."""
    values = np.asarray(sorted_values, dtype=np.float64)
    derivs = np.asarray(sorted_derivs, dtype=np.float64)
    if values.shape != derivs.shape or values.shape[0] != layout.n_sensors:
        raise DimensionError(
            f"expected two {layout.n_sensors}-row matrices of equal shape, "
            f"got {values.shape} and {derivs.shape}"
        )
    real = _block_means(values, layout)
    imag = _block_means(derivs, layout)
    return Signature(
        blocks_real=real,
        blocks_imag=imag,
        layout=layout,
        window_start=window_start,
        window_end=window_end,
        model_id=model_id,
    )


def _block_means(matrix: np.ndarray, layout: BlockLayout) -> np.ndarray:
    row_sums = matrix.sum(axis=1)
    sizes = np.fromiter((e - b + 1 for b, e in layout.ranges), dtype=np.int64)
    return _range_sums(row_sums, layout) / (sizes * matrix.shape[1])


def _range_sums(row_values: np.ndarray, layout: BlockLayout) -> np.ndarray:
    first = np.fromiter((b - 1 for b, _ in layout.ranges), dtype=np.int64)
    last = np.fromiter((e for _, e in layout.ranges), dtype=np.int64)
    # Interleave (start, stop) boundaries; reduceat sums every other segment,
    # which tolerates the one-row overlap between adjacent blocks.
    bounds = np.empty(2 * len(first), dtype=np.int64)
    bounds[0::2] = first
    bounds[1::2] = last
    return np.add.reduceat(row_values, bounds[:-1])[0::2]


_CHUNK_ROWS = 512


def compute_signature(window: Window, model: CSModel, n_blocks: int) -> Signature:
    """Full signature pipeline: normalize and sort, then smooth into l blocks.

    Produces the same blocks as smooth(sort_normalize(window, model), layout)
    without materializing the sorted matrices: block means only need per-row
    window sums, and the backward differences telescope to (last normalized
    column - column preceding the window). Rows are normalized in chunks so
    the working set stays cache-resident at large n. O(w * n).
    """
    _check_window_sensors(window, model)
    layout = block_layout(model.n_sensors, n_blocks)
    n, width = window.values.shape
    lo = model.lower_bounds
    span = model.upper_bounds - model.lower_bounds
    flat = span == 0.0
    denom = np.where(flat, 1.0, span)

    value_sums = np.empty(n)
    last_col = np.empty(n)
    for start in range(0, n, _CHUNK_ROWS):
        rows = slice(start, min(start + _CHUNK_ROWS, n))
        chunk = window.values[rows] - lo[rows, None]
        np.divide(chunk, denom[rows, None], out=chunk)
        np.clip(chunk, 0.0, 1.0, out=chunk)
        chunk[flat[rows]] = 0.0
        value_sums[rows] = chunk.sum(axis=1)
        last_col[rows] = chunk[:, -1]

    if window.preceding is not None:
        prev = np.clip((window.preceding - lo) / denom, 0.0, 1.0)
        prev[flat] = 0.0
    else:
        first = np.clip((window.values[:, 0] - lo) / denom, 0.0, 1.0)
        first[flat] = 0.0
        prev = first
    deriv_sums = last_col - prev

    p = model.permutation
    sizes = np.fromiter((e - b + 1 for b, e in layout.ranges), dtype=np.int64)
    real = _range_sums(value_sums[p], layout) / (sizes * width)
    imag = _range_sums(deriv_sums[p], layout) / (sizes * width)
    return Signature(
        blocks_real=real,
        blocks_imag=imag,
        layout=layout,
        window_start=window.start,
        window_end=window.end,
        model_id=model.model_id,
    )


def resample_signature(sig: Signature, new_blocks: int) -> Signature:
    """Rescale a signature to a new block count by linear interpolation.

    Interpolation runs over block-center coordinates in sensor-row space, so
    signatures of different resolutions over the same sensors stay comparable.
    """
    if new_blocks < 1:
        raise InvalidBlockCountError(f"block count must be >= 1, got {new_blocks}")
    n = sig.layout.n_sensors
    new_layout = BlockLayout(n_sensors=n, ranges=_block_ranges(n, new_blocks))
    old_centers = _block_centers(sig.layout)
    new_centers = _block_centers(new_layout)
    real = np.interp(new_centers, *_strictly_increasing(old_centers, sig.blocks_real))
    imag = np.interp(new_centers, *_strictly_increasing(old_centers, sig.blocks_imag))
    return Signature(
        blocks_real=real,
        blocks_imag=imag,
        layout=new_layout,
        window_start=sig.window_start,
        window_end=sig.window_end,
        model_id=sig.model_id,
    )


def _block_centers(layout: BlockLayout) -> np.ndarray:
    return np.array([(b + e) / 2.0 for b, e in layout.ranges])


def _strictly_increasing(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # np.interp needs increasing sample points; duplicate centers (possible
    # only when a layout has more blocks than rows) collapse to their mean.
    if len(x) < 2 or np.all(np.diff(x) > 0):
        return x, y
    ux, inverse = np.unique(x, return_inverse=True)
    sums = np.bincount(inverse, weights=y)
    counts = np.bincount(inverse)
    return ux, sums / counts


def trim_central(sig: Signature, keep_fraction: float) -> Signature:
    """Drop the central, least informative blocks of a signature.

    Keeps ceil(l * keep_fraction / 2) blocks from each end (at least one per
    side); the layout records which original sensor ranges survive.
    """
    if not (0.0 < keep_fraction <= 1.0):
        raise InvalidParameterError(
            f"keep_fraction must be in (0, 1], got {keep_fraction}"
        )
    l = sig.n_blocks
    per_side = max(1, math.ceil(l * keep_fraction / 2))
    keep = sorted(set(range(per_side)) | set(range(l - per_side, l)))
    idx = np.array(keep, dtype=np.int64)
    layout = BlockLayout(
        n_sensors=sig.layout.n_sensors,
        ranges=tuple(sig.layout.ranges[i] for i in keep),
    )
    return Signature(
        blocks_real=sig.blocks_real[idx],
        blocks_imag=sig.blocks_imag[idx],
        layout=layout,
        window_start=sig.window_start,
        window_end=sig.window_end,
        model_id=sig.model_id,
    )


def _model_json(model: CSModel) -> str:
    return json.dumps(
        {
            "version": model.version,
            "sensor_ids": list(model.sensor_ids),
            "permutation": model.permutation.tolist(),
            "lower_bounds": model.lower_bounds.tolist(),
            "upper_bounds": model.upper_bounds.tolist(),
        },
        indent=2,
    )


def save_model(model: CSModel, sink: IO | str | Path) -> None:
    """Write a model as versioned JSON; round-trips losslessly via load_model."""
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fh:
            save_model(model, fh)
        return
    sink.write(_model_json(model))
    sink.write("\n")


def load_model(source: IO | str | Path) -> CSModel:
    """Read a model file written by save_model, validating version and shape."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_model(fh)
    text = source.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if not text.strip():
        raise FormatError("model file is empty")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise FormatError("model file must hold a JSON object")
    version = payload.get("version")
    if version != MODEL_VERSION:
        raise UnsupportedVersionError(
            f"model version {version!r} is not supported (expected {MODEL_VERSION!r})"
        )
    try:
        return CSModel(
            sensor_ids=tuple(payload["sensor_ids"]),
            permutation=np.array(payload["permutation"], dtype=np.int64),
            lower_bounds=np.array(payload["lower_bounds"], dtype=np.float64),
            upper_bounds=np.array(payload["upper_bounds"], dtype=np.float64),
            version=version,
        )
    except KeyError as exc:
        raise FormatError(f"model file is missing field {exc}") from None
