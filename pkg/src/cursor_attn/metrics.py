"""Evaluation metrics and per-run reports.

Precision/recall/F1 are computed per class and averaged with class-support
weights, so the aggregate respects the target class distribution.  AUC is
the Mann-Whitney statistic normalized by n_pos * n_neg (ties credited 0.5),
which is insensitive to the class distribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SingleClassError


def _check_two_classes(labels: np.ndarray) -> None:
    if not ((labels == 0).any() and (labels == 1).any()):
        raise SingleClassError("both classes must be present in labels")


def weighted_prf(scores, labels, threshold: float = 0.5) -> tuple[float, float, float]:
    """Support-weighted precision, recall, and F1 at the given threshold.

    Cells with a zero denominator (no predictions for a class, or a
    degenerate class F1) are defined as 0.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    _check_two_classes(labels)
    preds = (scores > threshold).astype(np.int64)
    n = len(labels)
    precision = recall = f1 = 0.0
    for cls in (0, 1):
        tp = int(np.sum((preds == cls) & (labels == cls)))
        fp = int(np.sum((preds == cls) & (labels != cls)))
        fn = int(np.sum((preds != cls) & (labels == cls)))
        support = tp + fn
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / support if support else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        w = support / n
        precision += w * p
        recall += w * r
        f1 += w * f
    return precision, recall, f1


def roc_auc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    _check_two_classes(labels)
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    u = float(np.sum(ranks[labels == 1])) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


@dataclass(slots=True)
class EvalReport:
    """Per-run evaluation record; raw scores and labels are retained so
    every statistic can be recomputed downstream."""

    model_id: str
    representation: str
    scores: list[float]
    labels: list[int]
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    auc: float
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "model_id": self.model_id,
            "representation": self.representation,
            "scores": self.scores,
            "labels": self.labels,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "auc": self.auc,
            "config": self.config,
        }

    def metric(self, name: str) -> float:
        value = getattr(self, name if name != "f1" else "weighted_f1")
        return float(value)


def build_report(model_id: str, representation: str, scores, labels, config: dict | None = None) -> EvalReport:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    p, r, f1 = weighted_prf(scores, labels)
    return EvalReport(
        model_id=model_id,
        representation=representation,
        scores=[float(s) for s in scores],
        labels=[int(y) for y in labels],
        weighted_precision=p,
        weighted_recall=r,
        weighted_f1=f1,
        auc=roc_auc(scores, labels),
        config=dict(config or {}),
    )


def write_report(report: EvalReport, path: Path | str) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2), encoding="utf-8")


def load_report(path: Path | str) -> EvalReport:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return EvalReport(
        model_id=obj["model_id"],
        representation=obj["representation"],
        scores=[float(s) for s in obj["scores"]],
        labels=[int(y) for y in obj["labels"]],
        weighted_precision=float(obj["weighted_precision"]),
        weighted_recall=float(obj["weighted_recall"]),
        weighted_f1=float(obj["weighted_f1"]),
        auc=float(obj["auc"]),
        config=obj.get("config", {}),
    )
