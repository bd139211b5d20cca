"""Mouse-cursor attention prediction toolkit.

Converts raw cursor interaction logs into sequential and visual
representations, trains recurrent and convolutional classifiers on them
with a reproducible protocol, and statistically compares the results.
"""

from . import errors, metrics, render, sessions, stats, synth, timeseries, training
from .metrics import EvalReport, build_report, roc_auc, weighted_prf
from .nn import Model, ModelSpec, init_model, load_model, save_model
from .sessions import (
    DatasetSplit,
    LabeledSession,
    Session,
    binarize_label,
    clean_sessions,
    parse_session_log,
    stratified_split,
)
from .stats import friedman_test, holm_correction, wilcoxon_signed_rank
from .timeseries import TimeSeriesSample, encode_timeseries
from .training import TrainConfig, fit, lr_range_test, random_search

__version__ = "0.1.0"

__all__ = [
    "errors",
    "metrics",
    "render",
    "sessions",
    "stats",
    "synth",
    "timeseries",
    "training",
    "EvalReport",
    "build_report",
    "roc_auc",
    "weighted_prf",
    "Model",
    "ModelSpec",
    "init_model",
    "load_model",
    "save_model",
    "DatasetSplit",
    "LabeledSession",
    "Session",
    "binarize_label",
    "clean_sessions",
    "parse_session_log",
    "stratified_split",
    "TimeSeriesSample",
    "encode_timeseries",
    "TrainConfig",
    "fit",
    "lr_range_test",
    "random_search",
    "__version__",
]
