"""Cross-validated training, calibration and the baseline-vs-bridging ablation."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..errors import ParameterError
from .calibration import PlattScaler, platt_calibrate
from .evaluation import EvalReport, evaluate_classifier
from .features import (
    FEATURE_SETS, Design, FeatureSetSpec, Standardizer, assemble_features,
    class_weights, sample_weights, stratified_folds,
)
from .forest import RandomForest, train_random_forest
from .logistic import LogisticModel, train_logistic
from .shapley import shapley_attributions

MODEL_FAMILIES = ("lr", "rf")


@dataclass(frozen=True)
class ModelConfig:
    family: str = "rf"
    n_trees: int = 200
    max_depth: int = 12
    min_leaf: int = 2
    l2_strength: float = 1.0
    max_iter: int = 100
    tol: float = 1e-8
    calibration_share: float = 0.2
    shap_instances_per_fold: int = 40
    shap_background: int = 50

    def __post_init__(self):
        if self.family not in MODEL_FAMILIES:
            raise ParameterError(f"unknown model family {self.family!r}")
        if not 0 < self.calibration_share < 1:
            raise ParameterError("calibration_share must lie in (0, 1)")


def derive_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


@dataclass
class FittedModel:
    scaler: Standardizer
    model: LogisticModel | RandomForest
    calibrator: PlattScaler

    def score(self, X) -> np.ndarray:
        return self.model.decision_function(self.scaler.transform(np.asarray(X, dtype=float)))

    def predict_proba(self, X) -> np.ndarray:
        return self.calibrator(self.score(X))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for arr in (self.scaler.mean, self.scaler.scale):
            h.update(np.ascontiguousarray(arr).tobytes())
        if isinstance(self.model, LogisticModel):
            h.update(self.model.w.tobytes())
            h.update(np.float64(self.model.b).tobytes())
        else:
            for t in self.model.trees:
                for arr in (t.feature, t.threshold, t.left, t.right, t.value):
                    h.update(arr.tobytes())
        h.update(np.array([self.calibrator.A, self.calibrator.B]).tobytes())
        return h.hexdigest()


def fit_model(X_train, y_train, config: ModelConfig, seed: int = 0, threads: int = 1) -> FittedModel:
    """Standardize, fit on an inner split and calibrate on its holdout.

    Only ``X_train``/``y_train`` are read.  The holdout is a stratified
    ``calibration_share`` slice so Platt scaling sees out-of-sample scores.
    """
    X_train = np.asarray(X_train, dtype=float)
    y_train = np.asarray(y_train, dtype=int)
    scaler = Standardizer.fit(X_train)
    Z = scaler.transform(X_train)
    k = max(2, int(round(1.0 / config.calibration_share)))
    inner = stratified_folds(y_train, k, derive_seed(seed, 1))
    cal = inner == 0
    fit_rows = ~cal
    y_fit = y_train[fit_rows]
    weights = class_weights(y_fit)
    if config.family == "lr":
        model = train_logistic(Z[fit_rows], y_fit, sample_weights(y_fit, weights),
                               config.l2_strength, config.max_iter, config.tol)
    else:
        model = train_random_forest(Z[fit_rows], y_fit, config.n_trees, config.max_depth,
                                    config.min_leaf, class_weights=weights,
                                    seed=derive_seed(seed, 2), threads=threads)
    calibrator = platt_calibrate(model.decision_function(Z[cal]), y_train[cal])
    return FittedModel(scaler, model, calibrator)


@dataclass
class CVResult:
    feature_set: str
    family: str
    columns: tuple[str, ...]
    folds: list[EvalReport]
    pooled: EvalReport
    oof_probability: np.ndarray
    fold_of: np.ndarray
    fingerprints: list[str]
    calibration: list[tuple[float, float]]
    shapley_mean_abs: dict[str, float] = field(default_factory=dict)

    def mean_fold(self) -> dict[str, float]:
        keys = ("accuracy", "precision", "recall", "f1", "roc_auc")
        return {k: float(np.mean([getattr(r, k) for r in self.folds])) for k in keys}

    def ranking(self) -> list[str]:
        return sorted(self.shapley_mean_abs, key=lambda c: -self.shapley_mean_abs[c])

    def to_json(self) -> dict:
        return {
            "feature_set": self.feature_set,
            "model": self.family,
            "columns": list(self.columns),
            "pooled": self.pooled.summary(),
            "mean_fold": self.mean_fold(),
            "per_fold": [r.summary() for r in self.folds],
            "roc_points": [list(p) for p in self.pooled.roc_points],
            "calibration": [{"A": a, "B": b} for a, b in self.calibration],
            "shapley_mean_abs": self.shapley_mean_abs,
            "shapley_ranking": self.ranking(),
        }


def cross_validate(
    design: Design,
    config: ModelConfig,
    folds: np.ndarray,
    seed: int = 0,
    threads: int = 1,
    feature_set: str = "",
    explain: bool = True,
) -> CVResult:
    X, y = design.X, design.y
    k = int(folds.max()) + 1
    oof = np.zeros(y.size)
    reports, prints, cals = [], [], []
    shap_sum = np.zeros(X.shape[1])
    shap_n = 0
    for f in range(k):
        test = folds == f
        fitted = fit_model(X[~test], y[~test], config, derive_seed(seed, 100 + f), threads)
        prob = fitted.predict_proba(X[test])
        oof[test] = prob
        reports.append(evaluate_classifier(prob, y[test]))
        prints.append(fitted.fingerprint())
        cals.append((fitted.calibrator.A, fitted.calibrator.B))
        if explain:
            rng = np.random.default_rng(derive_seed(seed, 200 + f))
            train_idx = np.flatnonzero(~test)
            test_idx = np.flatnonzero(test)
            bg = X[rng.choice(train_idx, min(config.shap_background, train_idx.size), replace=False)]
            inst = X[rng.choice(test_idx, min(config.shap_instances_per_fold, test_idx.size), replace=False)]
            phi = shapley_attributions(fitted.predict_proba, inst, bg)
            shap_sum += np.abs(phi).sum(axis=0)
            shap_n += phi.shape[0]
    shap = {c: float(v / shap_n) for c, v in zip(design.columns, shap_sum)} if shap_n else {}
    return CVResult(
        feature_set=feature_set,
        family=config.family,
        columns=design.columns,
        folds=reports,
        pooled=evaluate_classifier(oof, y),
        oof_probability=oof,
        fold_of=folds,
        fingerprints=prints,
        calibration=cals,
        shapley_mean_abs=shap,
    )


def ablation_run(
    rows: Iterable,
    families: Sequence[str] = ("rf", "lr"),
    k: int = 5,
    seed: int = 0,
    threads: int = 1,
    shuffle_labels: bool = False,
    config_overrides: dict | None = None,
    explain: bool = True,
) -> dict:
    """Baseline vs bridging feature sets on identical rows and folds.

    Rows missing any feature of either set are removed before folding so
    both feature sets see the same authors in the same folds.
    """
    rows = list(rows)
    union = tuple(dict.fromkeys(FEATURE_SETS["baseline"] + FEATURE_SETS["bridging"]))
    designs = {
        name: assemble_features(rows, FeatureSetSpec.named(name), require=union)
        for name in ("baseline", "bridging")
    }
    y = designs["baseline"].y
    if shuffle_labels:
        y = np.random.default_rng(derive_seed(seed, 999)).permutation(y)
        for d in designs.values():
            d.y = y
    folds = stratified_folds(y, k, seed)
    results: dict[str, dict[str, CVResult]] = {}
    for name, design in designs.items():
        results[name] = {}
        for fam in families:
            cfg = ModelConfig(family=fam, **(config_overrides or {}))
            results[name][fam] = cross_validate(design, cfg, folds, seed, threads, name, explain)
    return {
        "n_rows": int(y.size),
        "n_dropped": designs["baseline"].n_dropped,
        "n_comeback": int(y.sum()),
        "n_dropout": int(y.size - y.sum()),
        "folds": folds,
        "results": results,
    }
