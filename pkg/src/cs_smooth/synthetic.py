"""Synthetic sensor-matrix generators for tests, demos and benchmarks."""

from __future__ import annotations

import numpy as np

from .core import SensorMatrix, TimeGrid, Window


def smooth_signal(t: int, rng: np.random.Generator) -> np.ndarray:
    """A unit-variance random walk; adjacent samples change slowly."""
    s = np.cumsum(rng.standard_normal(t))
    sd = s.std()
    return (s - s.mean()) / (sd if sd > 0 else 1.0)


def plateau_signal(
    t: int, rng: np.random.Generator, plateau_len: int = 100, drift: float = 0.3
) -> np.ndarray:
    """Monitoring-style signal: piecewise-constant load levels plus slow drift.

    Values sit on plateaus with occasional jumps, so first differences are
    tiny except at level changes; standardized to zero mean, unit variance.
    """
    levels = rng.uniform(-1.0, 1.0, size=t // plateau_len + 2)
    steps = np.repeat(levels, plateau_len)[:t]
    s = steps + drift * smooth_signal(t, rng)
    sd = s.std()
    return (s - s.mean()) / (sd if sd > 0 else 1.0)


def clustered_plateau_matrix(
    n_pos: int,
    n_neg: int,
    n_noise: int,
    t: int = 600,
    noise_scale: float = 0.05,
    seed: int = 0,
    plateau_len: int = 100,
    interval: int = 1000,
) -> SensorMatrix:
    """Two opposing clusters around a plateau signal, plus independent noise.

    Like :func:`anti_correlated_matrix` but with plateau-style dynamics: every
    noise term is an independent plateau signal scaled to ``noise_scale``
    times the shared signal's deviation.
    """
    rng = np.random.default_rng(seed)
    s = plateau_signal(t, rng, plateau_len)
    sigma = noise_scale * s.std()
    noise = lambda: sigma * plateau_signal(t, rng, plateau_len)
    rows = [s + noise() for _ in range(n_pos)]
    rows += [-s + noise() for _ in range(n_neg)]
    rows += [noise() for _ in range(n_noise)]
    n = len(rows)
    return SensorMatrix(
        sensor_ids=tuple(f"s{i:03d}" for i in range(n)),
        grid=TimeGrid(start=0, interval=interval, count=t),
        data=np.stack(rows),
    )


def anti_correlated_matrix(
    n_pos: int,
    n_neg: int,
    n_noise: int,
    t: int,
    noise_scale: float = 0.05,
    seed: int = 0,
    interval: int = 1000,
) -> SensorMatrix:
    """Two opposing clusters tracking one signal, plus independent noise rows.

    Rows 0..n_pos-1 follow the shared signal, the next n_neg rows follow its
    negation, the last n_noise rows are pure noise; all noise terms have
    standard deviation ``noise_scale`` times the signal's.
    """
    rng = np.random.default_rng(seed)
    s = smooth_signal(t, rng)
    sigma = noise_scale * s.std()
    rows = [s + sigma * rng.standard_normal(t) for _ in range(n_pos)]
    rows += [-s + sigma * rng.standard_normal(t) for _ in range(n_neg)]
    rows += [sigma * rng.standard_normal(t) for _ in range(n_noise)]
    n = len(rows)
    return SensorMatrix(
        sensor_ids=tuple(f"s{i:03d}" for i in range(n)),
        grid=TimeGrid(start=0, interval=interval, count=t),
        data=np.stack(rows),
    )


def class_stream(
    label: int,
    n_sensors: int,
    n_samples: int,
    seed: int = 0,
    interval: int = 1000,
    noise_scale: float = 0.05,
) -> SensorMatrix:
    """A sensor matrix whose temporal pattern is characteristic of one class.

    Each class drives three sensor groups at distinct base levels with a
    class-specific oscillation frequency; the lower half of the sensors moves
    with the pattern and the upper half against it. Streams of different
    classes are separable both in levels and in dynamics.
    """
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0, 2 * np.pi)
    k = np.arange(n_samples)
    freq = 2.0 + 3.0 * label
    wave = np.sin(2 * np.pi * freq * k / max(64, n_samples) + phase)
    levels = np.array([0.2, 0.5, 0.8])
    base = levels[(np.arange(n_sensors) + label) % 3]
    direction = np.where(np.arange(n_sensors) < n_sensors // 2, 1.0, -1.0)
    amp = 0.25 + 0.1 * label
    data = (
        base[:, None]
        + amp * direction[:, None] * wave[None, :]
        + noise_scale * rng.standard_normal((n_sensors, n_samples))
    )
    return SensorMatrix(
        sensor_ids=tuple(f"s{i:03d}" for i in range(n_sensors)),
        grid=TimeGrid(start=0, interval=interval, count=n_samples),
        data=data,
    )


def random_window(n_sensors: int, length: int, seed: int = 0) -> Window:
    """A uniform-random window, e.g. for timing signature methods."""
    rng = np.random.default_rng(seed)
    return Window(
        sensor_ids=tuple(f"s{i:05d}" for i in range(n_sensors)),
        values=rng.uniform(0.0, 1.0, size=(n_sensors, length)),
        preceding=rng.uniform(0.0, 1.0, size=n_sensors),
        start=0,
        end=(length - 1) * 1000,
    )
