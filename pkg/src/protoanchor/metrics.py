"""Evaluation metrics: fold-wise accuracy and macro mean average precision."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, UndefinedMetricError
from .heads import ScoreMatrix


@dataclass(frozen=True)
class EvalReport:
    """Per-fold and aggregate metric values plus the configuration that produced them."""

    config: dict
    per_fold: list[tuple[int, float]]
    aggregate: float
    n_queries: int
    excluded_classes: int = 0
    metric: str = "accuracy"

    def __post_init__(self):
        values = [v for _, v in self.per_fold] + [self.aggregate]
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise ContractError(f"metric value {v} outside [0, 1]")
        if self.per_fold:
            mean = sum(v for _, v in self.per_fold) / len(self.per_fold)
            if abs(mean - self.aggregate) > 1e-9:
                raise ContractError(
                    f"aggregate {self.aggregate} is not the mean of per-fold values {mean}"
                )

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "metric": self.metric,
            "per_fold": [[f, v] for f, v in self.per_fold],
            "aggregate": self.aggregate,
            "n_queries": self.n_queries,
            "excluded_classes": self.excluded_classes,
        }

    def to_json(self) -> str:
        """Deterministic serialization: sorted keys, LF-free single values."""
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=2)


def fold_accuracy(predictions: list[str], truth: list[str], folds: list[int],
                  config: dict | None = None) -> EvalReport:
    """Accuracy per fold and the unweighted mean across folds."""
    if not (len(predictions) == len(truth) == len(folds)):
        raise ContractError(
            f"length mismatch: {len(predictions)} predictions, "
            f"{len(truth)} labels, {len(folds)} folds"
        )
    if not predictions:
        raise ContractError("no queries to evaluate")
    for i, (t, f) in enumerate(zip(truth, folds)):
        if t is None:
            raise ContractError(f"query {i} has no true label")
        if f is None:
            raise ContractError(f"query {i} has no fold")
    fold_ids = sorted(set(folds))
    per_fold = []
    for fid in fold_ids:
        idx = [i for i, f in enumerate(folds) if f == fid]
        correct = sum(1 for i in idx if predictions[i] == truth[i])
        per_fold.append((fid, correct / len(idx)))
    aggregate = sum(v for _, v in per_fold) / len(per_fold)
    return EvalReport(config or {}, per_fold, aggregate, len(predictions),
                      metric="accuracy")


def average_precision(scores: np.ndarray, positives: np.ndarray) -> float:
    """AP of one ranking: mean over positive items of precision at their rank.

    Items are ranked by descending score, ties by ascending item index.
    Raises UndefinedMetricError when there is no positive item.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    if scores.ndim != 1 or scores.shape != positives.shape:
        raise ContractError(
            f"scores shape {scores.shape} does not match positives {positives.shape}"
        )
    n_pos = int(positives.sum())
    if n_pos == 0:
        raise UndefinedMetricError("average precision is undefined without positives")
    order = np.lexsort((np.arange(scores.shape[0]), -scores))
    hits = positives[order]
    cum_pos = np.cumsum(hits)
    ranks = np.arange(1, scores.shape[0] + 1)
    return float((cum_pos[hits] / ranks[hits]).sum() / n_pos)


def mean_average_precision(score_matrix: ScoreMatrix, truth: np.ndarray,
                           config: dict | None = None, fold_id: int = 0) -> EvalReport:
    """Macro mAP: unweighted mean of per-class AP over classes with >= 1 positive.

    ``truth`` is a queries x classes one-hot matrix aligned with the score
    matrix. Zero-positive classes are excluded and counted in the report.
    """
    truth = np.asarray(truth)
    if truth.shape != score_matrix.scores.shape:
        raise ContractError(
            f"truth shape {truth.shape} does not match scores {score_matrix.scores.shape}"
        )
    truth = truth.astype(bool)
    aps = []
    excluded = 0
    for c in range(truth.shape[1]):
        if not truth[:, c].any():
            excluded += 1
            continue
        aps.append(average_precision(score_matrix.scores[:, c], truth[:, c]))
    if not aps:
        raise ContractError("no class has a positive query; mAP is undefined")
    value = float(np.mean(aps))
    return EvalReport(config or {}, [(fold_id, value)], value, truth.shape[0],
                      excluded_classes=excluded, metric="map")
