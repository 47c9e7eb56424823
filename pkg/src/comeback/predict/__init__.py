"""Comeback-vs-dropout classifiers: features, models, calibration, evaluation, attribution."""
from .ablation import ModelConfig, ablation_run, cross_validate, fit_model
from .calibration import PlattScaler, platt_calibrate
from .evaluation import EvalReport, auc_rank, auc_trapezoid, evaluate_classifier, roc_curve
from .features import FEATURE_SETS, FeatureSetSpec, Standardizer, assemble_features, stratified_folds
from .forest import RandomForest, train_random_forest
from .logistic import LogisticModel, train_logistic
from .shapley import shapley_attributions

__all__ = [
    "EvalReport", "FEATURE_SETS", "FeatureSetSpec", "LogisticModel", "ModelConfig", "PlattScaler",
    "RandomForest", "Standardizer", "ablation_run", "assemble_features", "auc_rank",
    "auc_trapezoid", "cross_validate", "evaluate_classifier", "fit_model",
    "platt_calibrate", "roc_curve", "shapley_attributions", "stratified_folds",
    "train_logistic", "train_random_forest",
]
