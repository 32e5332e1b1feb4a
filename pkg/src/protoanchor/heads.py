"""Scoring heads: map query/prototype similarities to predictions.

Single-label heads softmax the cosine scores (argmax decides, ties to the
lowest class index); multi-label heads apply a per-class sigmoid and leave
thresholding to ranking metrics. Zero-shot variants score against text
anchors directly instead of prototypes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax

from .errors import ContractError
from .prototypes import PrototypeSet
from .search import similarity_matrix
from .store import EmbeddingTable

HEADS = ("proto_single", "proto_multi", "zeroshot_single", "zeroshot_multi")


@dataclass(frozen=True)
class ScoreMatrix:
    """Queries x classes scores produced by one head."""

    query_ids: list[str]
    class_names: list[str]
    scores: np.ndarray
    head: str

    def __post_init__(self):
        if self.head not in HEADS:
            raise ContractError(f"unknown head {self.head!r}")
        if self.scores.shape != (len(self.query_ids), len(self.class_names)):
            raise ContractError(
                f"score matrix shape {self.scores.shape} does not match "
                f"{len(self.query_ids)} queries x {len(self.class_names)} classes"
            )


def _check_inputs(queries: EmbeddingTable, vectors: np.ndarray, what: str):
    if vectors.shape[0] == 0:
        raise ContractError(f"cannot classify against an empty {what}")
    if queries.dim != vectors.shape[1]:
        raise ContractError(
            f"dimension mismatch: queries {queries.dim} vs {what} {vectors.shape[1]}"
        )


def _single(queries, vectors, class_names, temperature, head):
    if temperature <= 0:
        raise ContractError(f"temperature must be positive, got {temperature}")
    _check_inputs(queries, vectors, "target set")
    raw = similarity_matrix(queries.rows, vectors)
    pred_idx = np.argmax(raw, axis=1)  # first max = lowest class index on ties
    probs = softmax(raw / temperature, axis=1)
    labels = [class_names[i] for i in pred_idx]
    return labels, ScoreMatrix(queries.ids, list(class_names), probs, head)


def _multi(queries, vectors, class_names, head):
    _check_inputs(queries, vectors, "target set")
    raw = similarity_matrix(queries.rows, vectors)
    return ScoreMatrix(queries.ids, list(class_names), expit(raw), head)


def classify_single(queries: EmbeddingTable, protos: PrototypeSet,
                    temperature: float = 1.0) -> tuple[list[str], ScoreMatrix]:
    """Predict one label per query: argmax cosine to the prototypes."""
    return _single(queries, protos.vectors, protos.class_names, temperature, "proto_single")


def score_multi(queries: EmbeddingTable, protos: PrototypeSet) -> ScoreMatrix:
    """Sigmoid of cosine to each prototype; raw scores for ranking metrics."""
    return _multi(queries, protos.vectors, protos.class_names, "proto_multi")


def zero_shot_single(queries: EmbeddingTable, text_anchors: EmbeddingTable,
                     temperature: float = 1.0) -> tuple[list[str], ScoreMatrix]:
    """Single-label zero-shot baseline: score against the text anchors themselves."""
    return _single(queries, text_anchors.rows, text_anchors.ids, temperature,
                   "zeroshot_single")


def zero_shot_multi(queries: EmbeddingTable,
                    text_anchors: EmbeddingTable) -> ScoreMatrix:
    """Multi-label zero-shot baseline: sigmoid of cosine to each text anchor."""
    return _multi(queries, text_anchors.rows, text_anchors.ids, "zeroshot_multi")


def write_predictions(path, matrix: ScoreMatrix, predictions: list[str] | None = None) -> None:
    """Persist per-query scores as JSONL: {"id", "pred"?, "scores": {class: float}}."""
    if predictions is not None and len(predictions) != len(matrix.query_ids):
        raise ContractError(
            f"{len(predictions)} predictions for {len(matrix.query_ids)} queries"
        )
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for i, qid in enumerate(matrix.query_ids):
                obj: dict = {"id": qid}
                if predictions is not None:
                    obj["pred"] = predictions[i]
                obj["scores"] = {
                    c: float(matrix.scores[i, j]) for j, c in enumerate(matrix.class_names)
                }
                f.write(json.dumps(obj, ensure_ascii=False) + "\n")
    except OSError as e:
        raise OSError(f"cannot write predictions {path}: {e}") from e
