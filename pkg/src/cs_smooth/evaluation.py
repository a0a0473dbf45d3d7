"""Downstream-task harness: stratified k-fold scoring of signature datasets.

Predictors are pluggable: anything with sklearn-style ``fit(X, y)`` and
``predict(X)`` works. A small exact-nearest-neighbor pair ships as the
reference predictor so the harness has no model-library dependency and fully
pinned tie-breaking.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionError,
    IncompatibilityError,
    InvalidParameterError,
    PredictorError,
    StratificationError,
    TaskError,
)

CLASSIFICATION = "classification"
REGRESSION = "regression"


class Predictor(Protocol):
    def fit(self, features: np.ndarray, labels: np.ndarray) -> None: ...

    def predict(self, features: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class LabeledDataset:
    """Feature rows (one per signature) with class or regression targets."""

    features: np.ndarray
    labels: np.ndarray
    task: str

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise DimensionError("features must be a 2-D matrix")
        if self.task not in (CLASSIFICATION, REGRESSION):
            raise TaskError(f"unknown task {self.task!r}")
        labels = np.asarray(self.labels)
        if self.task == REGRESSION:
            labels = labels.astype(np.float64)
        if len(labels) != feats.shape[0]:
            raise DimensionError(
                f"{feats.shape[0]} feature rows but {len(labels)} labels"
            )
        feats.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class EvalMetrics:
    """Cross-validation outcome: one aggregate score plus per-fold scores."""

    per_fold: tuple[float, ...]
    f1_macro: float | None = None
    nrmse_c: float | None = None

    @property
    def score(self) -> float:
        return self.f1_macro if self.f1_macro is not None else self.nrmse_c


def stratified_kfold(dataset: LabeledDataset, k: int, seed: int) -> list[np.ndarray]:
    """Split row indices into k disjoint folds of near-equal size.

    Rows are shuffled first (deterministically from ``seed``). Classification
    folds preserve per-class counts to within one; regression folds are plain
    shuffled splits.
    """
    if k < 2:
        raise InvalidParameterError(f"fold count must be >= 2, got {k}")
    m = dataset.n_rows
    if m < k:
        raise StratificationError(f"{m} rows cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(m)
    folds: list[list[int]] = [[] for _ in range(k)]
    if dataset.task == REGRESSION:
        for pos, idx in enumerate(shuffled):
            folds[pos % k].append(int(idx))
    else:
        labels = dataset.labels
        by_class: dict = {}
        for idx in shuffled:
            by_class.setdefault(labels[idx], []).append(int(idx))
        for label, members in by_class.items():
            if len(members) < k:
                raise StratificationError(
                    f"class {label!r} has {len(members)} members, needs >= {k}"
                )
        cursor = 0
        for label in sorted(by_class, key=repr):
            for idx in by_class[label]:
                folds[cursor % k].append(idx)
                cursor += 1
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def f1_macro(true_labels: Sequence, predicted_labels: Sequence) -> float:
    """Macro-averaged F1 over the classes present in the true labels.

    A class with zero precision+recall contributes 0.
    """
    true = np.asarray(true_labels)
    pred = np.asarray(predicted_labels)
    if true.shape != pred.shape:
        raise DimensionError(
            f"{len(true)} true labels but {len(pred)} predictions"
        )
    scores = []
    for cls in np.unique(true):
        tp = np.sum((pred == cls) & (true == cls))
        fp = np.sum((pred == cls) & (true != cls))
        fn = np.sum((pred != cls) & (true == cls))
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom > 0 else 0.0)
    return float(np.mean(scores))


def nrmse_c(true_values: Sequence[float], predicted_values: Sequence[float]) -> float:
    """Complemented range-normalized RMSE: 1 - RMSE / (max - min of truth)."""
    true = np.asarray(true_values, dtype=np.float64)
    pred = np.asarray(predicted_values, dtype=np.float64)
    if true.shape != pred.shape:
        raise DimensionError(f"{len(true)} true values but {len(pred)} predictions")
    if len(true) < 2:
        raise DegenerateInputError("need >= 2 values to normalize the error")
    span = true.max() - true.min()
    if span == 0:
        raise DegenerateInputError(
            "constant true values leave the normalized error undefined"
        )
    rmse = float(np.sqrt(np.mean((pred - true) ** 2)))
    return 1.0 - rmse / span


def cross_validate(
    dataset: LabeledDataset, predictor: Predictor, k: int, seed: int
) -> EvalMetrics:
    """Rotate through every train-on-(k-1)/test-on-1 fold combination."""
    folds = stratified_kfold(dataset, k, seed)
    per_fold = []
    for i, test_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        try:
            predictor.fit(dataset.features[train_idx], dataset.labels[train_idx])
            predicted = predictor.predict(dataset.features[test_idx])
        except Exception as exc:
            raise PredictorError(f"fold {i}: predictor failed: {exc}") from exc
        truth = dataset.labels[test_idx]
        if dataset.task == CLASSIFICATION:
            per_fold.append(f1_macro(truth, predicted))
        else:
            per_fold.append(nrmse_c(truth, predicted))
    mean = float(np.mean(per_fold))
    if dataset.task == CLASSIFICATION:
        return EvalMetrics(per_fold=tuple(per_fold), f1_macro=mean)
    return EvalMetrics(per_fold=tuple(per_fold), nrmse_c=mean)


class NearestNeighborClassifier:
    """Exact 1-nearest-neighbor under Euclidean distance.

    Distance ties resolve to the lowest training index, so predictions are
    reproducible bit-for-bit.
    """

    def __init__(self):
        self._X: np.ndarray | None = None
        self._y: np.ndarray | None = None

    def fit(self, features: np.ndarray, labels: np.ndarray) -> None:
        if len(features) == 0:
            raise DegenerateInputError("cannot fit on an empty training set")
        self._X = np.asarray(features, dtype=np.float64)
        self._y = np.asarray(labels)

    def predict(self, features: np.ndarray) -> np.ndarray:
        if self._X is None:
            raise PredictorError("predict called before fit")
        queries = np.asarray(features, dtype=np.float64)
        out = []
        for q in queries:
            d2 = ((self._X - q) ** 2).sum(axis=1)
            out.append(self._y[int(np.argmin(d2))])
        return np.array(out)


class KNearestMeanRegressor:
    """Mean of the k nearest targets under Euclidean distance (default k=5).

    Neighbor ranking ties resolve to lower training indices via stable sort.
    """

    def __init__(self, k: int = 5):
        self.k = k
        self._X: np.ndarray | None = None
        self._y: np.ndarray | None = None

    def fit(self, features: np.ndarray, labels: np.ndarray) -> None:
        if len(features) == 0:
            raise DegenerateInputError("cannot fit on an empty training set")
        self._X = np.asarray(features, dtype=np.float64)
        self._y = np.asarray(labels, dtype=np.float64)

    def predict(self, features: np.ndarray) -> np.ndarray:
        if self._X is None:
            raise PredictorError("predict called before fit")
        queries = np.asarray(features, dtype=np.float64)
        k = min(self.k, len(self._y))
        out = []
        for q in queries:
            d2 = ((self._X - q) ** 2).sum(axis=1)
            nearest = np.argsort(d2, kind="stable")[:k]
            out.append(float(self._y[nearest].mean()))
        return np.array(out)


def reference_predictor(task: str) -> Predictor:
    """The built-in predictor for a task: 1-NN classes, 5-NN mean targets."""
    if task == CLASSIFICATION:
        return NearestNeighborClassifier()
    if task == REGRESSION:
        return KNearestMeanRegressor()
    raise TaskError(f"unknown task {task!r}")


def merge_datasets(datasets: Sequence[LabeledDataset]) -> LabeledDataset:
    """Concatenate datasets row-wise; feature width and task must agree.

    Signatures of equal block count have equal width regardless of each
    source's sensor count, which is what makes cross-source merging possible.
    """
    if not datasets:
        raise DegenerateInputError("no datasets to merge")
    width = datasets[0].features.shape[1]
    task = datasets[0].task
    for i, ds in enumerate(datasets):
        if ds.features.shape[1] != width:
            raise IncompatibilityError(
                f"dataset {i} has feature width {ds.features.shape[1]}, expected {width}"
            )
        if ds.task != task:
            raise IncompatibilityError(f"dataset {i} has task {ds.task!r}, expected {task!r}")
    if len(datasets) == 1:
        return datasets[0]
    return LabeledDataset(
        features=np.concatenate([ds.features for ds in datasets]),
        labels=np.concatenate([ds.labels for ds in datasets]),
        task=task,
    )


def signature_features(
    real: np.ndarray, imag: np.ndarray | None, real_only: bool = False
) -> np.ndarray:
    """Flatten signature batches into model inputs: real parts, then imaginary.

    ``real_only`` drops the imaginary half, e.g. to measure how much the
    derivative information contributes to a task.
    """
    real = np.asarray(real, dtype=np.float64)
    if real_only or imag is None:
        return real.copy()
    imag = np.asarray(imag, dtype=np.float64)
    if imag.shape != real.shape:
        raise DimensionError("real and imaginary batches must share shape")
    return np.concatenate([real, imag], axis=1)
