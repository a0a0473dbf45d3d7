"""Time-series data model: ingestion, alignment, windowing, derivatives.

Sensor readings arrive as per-sensor timestamp/value streams with arbitrary
sampling; downstream signature methods need an n x t matrix on a uniform time
grid. Timestamps are integer milliseconds since epoch throughout.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .errors import (
    AlignmentError,
    CsSmoothError,
    DegenerateInputError,
    EmptyInputError,
    ParseError,
    RejectedValueError,
)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SensorSeries:
    """One sensor's stream: strictly increasing timestamps, finite values."""

    sensor_id: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vs = np.asarray(self.values, dtype=np.float64)
        if ts.ndim != 1 or vs.ndim != 1 or len(ts) != len(vs):
            raise CsSmoothError(
                f"sensor {self.sensor_id!r}: timestamps and values must be "
                f"1-D and equally long ({len(ts)} vs {len(vs)})"
            )
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise CsSmoothError(
                f"sensor {self.sensor_id!r}: timestamps must be strictly increasing"
            )
        if not np.all(np.isfinite(vs)):
            raise RejectedValueError(
                f"sensor {self.sensor_id!r}: non-finite value in series"
            )
        object.__setattr__(self, "timestamps", _readonly(ts))
        object.__setattr__(self, "values", _readonly(vs))

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``count`` instants spaced ``interval`` ms from ``start``."""

    start: int
    interval: int
    count: int

    def __post_init__(self):
        if self.interval <= 0:
            raise CsSmoothError("grid interval must be positive")
        if self.count < 1:
            raise CsSmoothError("grid count must be positive")

    @property
    def end(self) -> int:
        return self.start + (self.count - 1) * self.interval

    def instants(self) -> np.ndarray:
        return self.start + self.interval * np.arange(self.count, dtype=np.int64)


@dataclass(frozen=True)
class SensorMatrix:
    """n x t matrix of time-aligned readings; rows follow ``sensor_ids`` order."""

    sensor_ids: tuple[str, ...]
    grid: TimeGrid
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sensor_ids", tuple(self.sensor_ids))
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise CsSmoothError(f"matrix data must be 2-D, got {data.ndim}-D")
        n, t = data.shape
        if n != len(self.sensor_ids):
            raise CsSmoothError(
                f"{len(self.sensor_ids)} sensor ids but {n} data rows"
            )
        if t != self.grid.count:
            raise CsSmoothError(f"grid has {self.grid.count} instants but data has {t} columns")
        if n < 1 or t < 2:
            raise DegenerateInputError(f"matrix must be at least 1x2, got {n}x{t}")
        if not np.all(np.isfinite(data)):
            raise RejectedValueError("matrix contains non-finite entries")
        object.__setattr__(self, "data", _readonly(data))

    @property
    def n_sensors(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class WindowSpec:
    """Aggregation window length and step between window starts, in samples."""

    length_samples: int
    step_samples: int

    def __post_init__(self):
        if self.length_samples < 1 or self.step_samples < 1:
            raise CsSmoothError("window length and step must be >= 1 samples")


@dataclass(frozen=True)
class Window:
    """One aggregation window plus the column immediately preceding it.

    ``preceding`` is None for a window starting at the first matrix column;
    otherwise it holds the per-sensor values one sample before the window,
    which backward differences at the window boundary need.
    """

    sensor_ids: tuple[str, ...]
    values: np.ndarray
    preceding: np.ndarray | None
    start: int
    end: int


def load_sensor_csv(source: IO | str | Path, sensor_id: str) -> SensorSeries:
    """Parse a "timestamp,value" CSV stream into a SensorSeries.

    Lines beginning with '#' are comments. Records are re-sorted by timestamp;
    duplicate timestamps keep the last value seen in the file.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_sensor_csv(fh, sensor_id)
    points: dict[int, float] = {}
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 'timestamp,value', got {line!r}", line=lineno)
        try:
            ts = int(parts[0].strip())
            val = float(parts[1].strip())
        except ValueError as exc:
            raise ParseError(f"cannot parse {line!r}: {exc}", line=lineno) from None
        if not math.isfinite(val):
            raise RejectedValueError(
                f"sensor {sensor_id!r}: non-finite value at line {lineno}"
            )
        points[ts] = val
    if not points:
        raise EmptyInputError(f"sensor {sensor_id!r}: no records in stream")
    order = sorted(points)
    return SensorSeries(
        sensor_id=sensor_id,
        timestamps=np.array(order, dtype=np.int64),
        values=np.array([points[ts] for ts in order], dtype=np.float64),
    )


def load_dataset_dir(path: str | Path) -> list[SensorSeries]:
    """Load every ``*.csv`` in a directory; the file stem is the sensor id.

    Files are read in sorted-name order so the resulting row order is stable.
    ``labels.csv`` is reserved for window labels and skipped.
    """
    path = Path(path)
    files = sorted(
        p for p in path.glob("*.csv") if p.is_file() and p.name != "labels.csv"
    )
    if not files:
        raise EmptyInputError(f"no sensor CSV files in {path}")
    return [load_sensor_csv(p, p.stem) for p in files]


def infer_grid(series: Sequence[SensorSeries], interval: int | None = None) -> TimeGrid:
    """Derive a uniform grid spanning the common time range of all series.

    The interval defaults to the median of per-series median sample gaps; the
    span is the intersection of the series' spans so no sensor needs
    extrapolation over more than its own boundary samples.
    """
    if not series:
        raise EmptyInputError("no series to infer a grid from")
    if interval is None:
        gaps = [np.median(np.diff(s.timestamps)) for s in series if len(s) > 1]
        if not gaps:
            raise DegenerateInputError("cannot infer a grid interval from single-point series")
        interval = int(max(1, round(float(np.median(gaps)))))
    start = max(int(s.timestamps[0]) for s in series)
    end = min(int(s.timestamps[-1]) for s in series)
    if end < start:
        raise AlignmentError("series time spans do not overlap; cannot build a grid")
    count = (end - start) // interval + 1
    return TimeGrid(start=start, interval=interval, count=int(count))


def align(series: Iterable[SensorSeries], grid: TimeGrid) -> SensorMatrix:
    """Interpolate every series onto the grid, building a SensorMatrix.

    Linear interpolation between samples; instants outside a series' span take
    the nearest endpoint value. Row order follows the input collection order.
    """
    instants = grid.instants()
    rows = []
    ids = []
    for s in series:
        if len(s) == 0:
            raise AlignmentError(f"sensor {s.sensor_id!r} has no samples")
        if s.timestamps[-1] < grid.start or s.timestamps[0] > grid.end:
            raise AlignmentError(
                f"sensor {s.sensor_id!r} does not overlap the grid span "
                f"[{grid.start}, {grid.end}]"
            )
        rows.append(np.interp(instants, s.timestamps, s.values))
        ids.append(s.sensor_id)
    if not rows:
        raise EmptyInputError("no series to align")
    return SensorMatrix(sensor_ids=tuple(ids), grid=grid, data=np.stack(rows))


def windows(matrix: SensorMatrix, spec: WindowSpec) -> Iterator[Window]:
    """Enumerate complete aggregation windows left to right.

    Windows start every ``step_samples`` columns beginning at column one;
    incomplete trailing windows are dropped. Yields an empty sequence when the
    window is longer than the matrix.
    """
    wl, ws = spec.length_samples, spec.step_samples
    data = matrix.data
    t = matrix.n_samples
    instants = matrix.grid.instants()
    for s in range(0, t - wl + 1, ws):
        yield Window(
            sensor_ids=matrix.sensor_ids,
            values=data[:, s : s + wl],
            preceding=data[:, s - 1] if s > 0 else None,
            start=int(instants[s]),
            end=int(instants[s + wl - 1]),
        )


def finite_difference(series: SensorSeries) -> SensorSeries:
    """Backward first differences, anchored at the second timestamp onward.

    The usual pre-transform for monotonic counters (e.g. energy) whose raw
    values min-max normalization cannot handle.
    """
    if len(series) < 2:
        raise DegenerateInputError(
            f"sensor {series.sensor_id!r}: need >= 2 points to differentiate"
        )
    return SensorSeries(
        sensor_id=series.sensor_id,
        timestamps=series.timestamps[1:].copy(),
        values=np.diff(series.values),
    )
