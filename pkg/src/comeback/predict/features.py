"""Design matrices, standardization and stratified author-level folds."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..cohort import COMEBACK, DROPOUT
from ..errors import DataError, ParameterError

FEATURE_SETS: dict[str, tuple[str, ...]] = {
    "baseline": ("P", "h"),
    "bridging": ("XCC", "B", "ACC", "H_g"),
}


@dataclass(frozen=True)
class FeatureSetSpec:
    name: str
    columns: tuple[str, ...]

    @classmethod
    def named(cls, name: str) -> "FeatureSetSpec":
        key = name.lower()
        aliases = {"bridgingentropy": "bridging", "bridging_entropy": "bridging"}
        key = aliases.get(key, key)
        if key not in FEATURE_SETS:
            raise ParameterError(f"unknown feature set {name!r}")
        return cls(key, FEATURE_SETS[key])


@dataclass
class Design:
    X: np.ndarray
    y: np.ndarray
    author_ids: list[str]
    columns: tuple[str, ...]
    n_dropped: int


def _value(row, col):
    return row[col] if isinstance(row, dict) else getattr(row, col)


def assemble_features(rows: Iterable, spec: FeatureSetSpec | Sequence[str], require: Sequence[str] = ()) -> Design:
    """Comeback (1) vs Dropout (0) design matrix for the chosen columns.

    Other labels are ignored.  Rows missing any selected column, or any
    column in ``require``, are dropped and counted.
    """
    columns = spec.columns if isinstance(spec, FeatureSetSpec) else tuple(spec)
    needed = tuple(dict.fromkeys(columns + tuple(require)))
    X, y, ids = [], [], []
    dropped = 0
    for r in rows:
        label = _value(r, "label")
        if label not in (COMEBACK, DROPOUT):
            continue
        vals = [_value(r, c) for c in needed]
        if any(v is None or (isinstance(v, float) and np.isnan(v)) for v in vals):
            dropped += 1
            continue
        X.append([float(_value(r, c)) for c in columns])
        y.append(1 if label == COMEBACK else 0)
        ids.append(_value(r, "author_id"))
    y_arr = np.array(y, dtype=int)
    if (y_arr == 1).sum() < 2 or (y_arr == 0).sum() < 2:
        raise DataError("need at least two Comeback and two Dropout rows")
    return Design(np.array(X, dtype=float).reshape(len(y), len(columns)), y_arr, ids, columns, dropped)


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        # constant columns map to zero instead of dividing by zero
        return cls(mean, np.where(sd > 0, sd, 1.0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


def stratified_folds(labels: Sequence[int], k: int = 5, seed: int = 0) -> np.ndarray:
    """Fold index per row, preserving class proportions.

    Each class is shuffled and dealt round-robin; the dealing continues from
    one class to the next so fold sizes also stay balanced.
    """
    y = np.asarray(labels)
    if k < 2:
        raise ParameterError("need at least two folds")
    classes, counts = np.unique(y, return_counts=True)
    if np.any(counts < k):
        raise DataError(f"every class needs at least {k} rows (got {dict(zip(classes.tolist(), counts.tolist()))})")
    rng = np.random.default_rng(seed)
    folds = np.empty(y.size, dtype=int)
    offset = 0
    for c in classes:
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        folds[idx] = (np.arange(idx.size) + offset) % k
        offset += idx.size
    return folds


def class_weights(y: np.ndarray) -> dict[int, float]:
    """Balanced weights ``n / (2 n_c)``."""
    n = y.size
    return {c: n / (2.0 * np.sum(y == c)) for c in (0, 1) if np.sum(y == c) > 0}


def sample_weights(y: np.ndarray, weights: dict[int, float] | None) -> np.ndarray:
    if weights is None:
        return np.ones(y.size)
    return np.array([weights[int(v)] for v in y], dtype=float)
