"""Compression fidelity via 2-D Jensen-Shannon divergence.

Joint distributions over hundreds of sensor dimensions are intractable, so
both the original (sorted, normalized) data and the signature set are
collapsed to a (dimension x value-bin) probability mass: per-dimension value
histograms, each carrying 1/n of the total mass. The base-2 divergence between
two such distributions lies in [0, 1]; lower means higher similarity.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .core import SensorMatrix, Window, WindowSpec, windows
from .cs import BlockLayout, CSModel, Signature, compute_signature, sort_normalize
from .errors import DegenerateInputError, IncompatibilityError

DEFAULT_BINS = 100


@dataclass(frozen=True)
class Histogram2D:
    """(dimension x value-bin) probability mass; every dimension holds 1/n."""

    bins: int
    value_range: tuple[float, float]
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        mass.flags.writeable = False
        object.__setattr__(self, "mass", mass)
        object.__setattr__(
            self, "value_range", (float(self.value_range[0]), float(self.value_range[1]))
        )

    @property
    def n_dims(self) -> int:
        return self.mass.shape[0]


@dataclass(frozen=True)
class FidelityComponents:
    """Divergences of the value and derivative comparisons, plus their mean."""

    js_real: float
    js_imag: float

    @property
    def js_mean(self) -> float:
        return (self.js_real + self.js_imag) / 2.0


def build_distribution(
    matrix: np.ndarray, bins: int, value_range: tuple[float, float]
) -> Histogram2D:
    """Histogram each row uniformly over ``value_range`` into a Histogram2D.

    Values outside the range are clamped into the edge bins; each row's
    histogram is normalized to total 1/n_dims so the whole mass sums to one.
    """
    data = np.asarray(matrix, dtype=np.float64)
    if data.ndim != 2 or data.size == 0:
        raise DegenerateInputError("distribution needs a non-empty 2-D matrix")
    lo, hi = float(value_range[0]), float(value_range[1])
    if not hi > lo:
        raise DegenerateInputError(f"value range must satisfy hi > lo, got ({lo}, {hi})")
    n, width = data.shape
    clipped = np.clip(data, lo, hi)
    # Scale into bin indices; the right edge joins the last bin.
    idx = np.minimum(
        ((clipped - lo) * (bins / (hi - lo))).astype(np.int64), bins - 1
    )
    mass = np.zeros((n, bins))
    rows = np.repeat(np.arange(n), width)
    np.add.at(mass, (rows, idx.ravel()), 1.0)
    mass /= width * n
    return Histogram2D(bins=bins, value_range=(lo, hi), mass=mass)


def expand_signatures(
    signatures: Sequence[Signature], n_rows: int
) -> tuple[np.ndarray, np.ndarray]:
    """Expand signature blocks back to sensor rows by nearest-block assignment.

    Returns (real matrix, imag matrix), each n_rows x len(signatures): one
    column per signature, with each sensor row taking the value of the block
    whose range contains it (the earlier block wins on overlaps and gaps).
    """
    if not signatures:
        raise DegenerateInputError("no signatures to expand")
    layout = signatures[0].layout
    for sig in signatures[1:]:
        if sig.layout != layout:
            raise IncompatibilityError("signatures use different block layouts")
    if n_rows < layout.n_blocks:
        raise IncompatibilityError(
            f"cannot expand {layout.n_blocks} blocks onto {n_rows} rows"
        )
    assignment = _row_to_block(layout, n_rows)
    real = np.stack([sig.blocks_real[assignment] for sig in signatures], axis=1)
    imag = np.stack([sig.blocks_imag[assignment] for sig in signatures], axis=1)
    return real, imag


def _row_to_block(layout: BlockLayout, n_rows: int) -> np.ndarray:
    firsts = np.array([b for b, _ in layout.ranges], dtype=np.float64)
    lasts = np.array([e for _, e in layout.ranges], dtype=np.float64)
    rows = np.arange(1, n_rows + 1, dtype=np.float64)[:, None]
    # Distance zero inside a block; ties and uncovered rows go to the earliest
    # block, which also realizes the overlap rule for shared boundary sensors.
    dist = np.maximum(firsts[None, :] - rows, 0) + np.maximum(rows - lasts[None, :], 0)
    return np.argmin(dist, axis=1)


def js_divergence(p: Histogram2D, q: Histogram2D) -> float:
    """Base-2 Jensen-Shannon divergence between two Histogram2D, in [0, 1]."""
    if p.mass.shape != q.mass.shape or p.value_range != q.value_range:
        raise IncompatibilityError(
            "histograms must share shape and value range to be compared"
        )
    mid = (p.mass + q.mass) / 2.0
    div = _entropy(mid) - (_entropy(p.mass) + _entropy(q.mass)) / 2.0
    return float(min(1.0, max(0.0, div)))


def _entropy(mass: np.ndarray) -> float:
    flat = mass.ravel()
    nz = flat[flat > 0]
    return float(-(nz * np.log2(nz)).sum())


def fidelity_components(
    original: SensorMatrix,
    model: CSModel,
    spec: WindowSpec,
    n_blocks: int,
    bins: int = DEFAULT_BINS,
) -> FidelityComponents:
    """Compare signature sets against the data they compress.

    Runs the comparison twice: real parts against the sorted+normalized
    original values over (0,1), imaginary parts against their first
    differences over (-1,1); signature columns are expanded back to n rows
    first. Lower is better; 0 means indistinguishable up to binning.
    """
    full = Window(
        sensor_ids=original.sensor_ids,
        values=original.data,
        preceding=None,
        start=int(original.grid.start),
        end=int(original.grid.end),
    )
    norm_full, deriv_full = sort_normalize(full, model)
    sigs = [compute_signature(w, model, n_blocks) for w in windows(original, spec)]
    if not sigs:
        raise DegenerateInputError(
            "no complete windows: shrink the window or provide more data"
        )
    real_exp, imag_exp = expand_signatures(sigs, original.n_sensors)
    p_vals = build_distribution(norm_full, bins, (0.0, 1.0))
    q_vals = build_distribution(real_exp, bins, (0.0, 1.0))
    p_derivs = build_distribution(deriv_full, bins, (-1.0, 1.0))
    q_derivs = build_distribution(imag_exp, bins, (-1.0, 1.0))
    return FidelityComponents(
        js_real=js_divergence(p_vals, q_vals),
        js_imag=js_divergence(p_derivs, q_derivs),
    )


def cs_fidelity(
    original: SensorMatrix,
    model: CSModel,
    spec: WindowSpec,
    n_blocks: int,
    bins: int = DEFAULT_BINS,
) -> float:
    """Mean of the value and derivative divergences; see fidelity_components."""
    return fidelity_components(original, model, spec, n_blocks, bins).js_mean
