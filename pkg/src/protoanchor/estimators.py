"""Scikit-learn style estimators wrapping the prototype and zero-shot heads.

These adapters let the pipeline compose with the wider ecosystem: plain
arrays in, ``fit``/``predict``/``predict_proba`` out, ``get_params`` for
cloning and grid search. The functional modules remain the source of truth;
the estimators validate inputs and delegate.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ContractError
from .heads import classify_single, score_multi, zero_shot_multi, zero_shot_single
from .prototypes import (
    PrototypeProvenance,
    PrototypeSet,
    build_supervised,
    build_text_anchored,
)
from .search import similarity_matrix
from .store import EmbeddingTable, RowMeta, normalize_rows


def check_embeddings(X, dim: int | None = None) -> np.ndarray:
    """Validate an embedding matrix: 2-d, finite, nonzero rows; returns unit-norm float32.

    Always returns a fresh array, so callers may freeze it without touching
    the caller's data.
    """
    X = check_array(X, dtype=np.float32, ensure_2d=True, ensure_all_finite=True, copy=True)
    if dim is not None and X.shape[1] != dim:
        raise ContractError(f"expected dim {dim}, got {X.shape[1]}")
    return normalize_rows(X)


def _as_table(X: np.ndarray, prefix: str) -> EmbeddingTable:
    meta = [RowMeta(id=f"{prefix}{i}") for i in range(X.shape[0])]
    return EmbeddingTable(X, meta, copy=False)


class _ScoringMixin:
    """Shared prediction surface once ``prototypes_`` and ``classes_`` exist."""

    def _proto_set(self) -> PrototypeSet:
        check_is_fitted(self, "prototypes_")
        return self.prototypes_

    def decision_function(self, X) -> np.ndarray:
        """Raw cosine similarity of each query to each class vector."""
        protos = self._proto_set()
        queries = check_embeddings(X, protos.dim)
        return similarity_matrix(queries, protos.vectors)

    def predict(self, X) -> np.ndarray:
        protos = self._proto_set()
        queries = _as_table(check_embeddings(X, protos.dim), "q")
        labels, _ = classify_single(queries, protos, self.temperature)
        return np.asarray(labels, dtype=object)

    def predict_proba(self, X) -> np.ndarray:
        """Softmax over cosine scores (single-label head)."""
        protos = self._proto_set()
        queries = _as_table(check_embeddings(X, protos.dim), "q")
        _, matrix = classify_single(queries, protos, self.temperature)
        return matrix.scores

    def multilabel_proba(self, X) -> np.ndarray:
        """Per-class sigmoid of cosine scores (multi-label head)."""
        protos = self._proto_set()
        queries = _as_table(check_embeddings(X, protos.dim), "q")
        return score_multi(queries, protos).scores


class TextAnchoredPrototypeClassifier(_ScoringMixin, ClassifierMixin, BaseEstimator):
    """Unsupervised prototypes: text anchors retrieve kNN audio clusters.

    ``fit`` consumes an unlabeled pool of audio embeddings plus one anchor
    embedding per class; each class prototype is the normalized centroid of
    the anchor's k nearest pool rows.
    """

    def __init__(self, k: int = 35, temperature: float = 1.0):
        self.k = k
        self.temperature = temperature

    def fit(self, X, y=None, *, anchors=None, classes=None):
        if anchors is None:
            raise ContractError("fit requires anchors (one text embedding per class)")
        X = check_embeddings(X)
        anchors = check_embeddings(anchors, X.shape[1])
        if classes is None:
            classes = [str(i) for i in range(anchors.shape[0])]
        if len(classes) != anchors.shape[0]:
            raise ContractError(
                f"{len(classes)} class names for {anchors.shape[0]} anchors"
            )
        audio = _as_table(X, "pool")
        text = EmbeddingTable(anchors, [RowMeta(id=str(c)) for c in classes], copy=False)
        self.prototypes_ = build_text_anchored(text, audio, self.k)
        self.classes_ = np.asarray(self.prototypes_.class_names, dtype=object)
        self.n_features_in_ = X.shape[1]
        return self


class SupervisedPrototypeClassifier(_ScoringMixin, ClassifierMixin, BaseEstimator):
    """Label-grouped prototypes: per class, the centroid of its labeled rows."""

    def __init__(self, temperature: float = 1.0):
        self.temperature = temperature

    def fit(self, X, y):
        X = check_embeddings(X)
        y = list(y)
        if len(y) != X.shape[0]:
            raise ContractError(f"{len(y)} labels for {X.shape[0]} rows")
        labels = [[v] if isinstance(v, str) else list(v) for v in y]
        classes = sorted({c for row in labels for c in row})
        meta = [RowMeta(id=f"row{i}", labels=row) for i, row in enumerate(labels)]
        table = EmbeddingTable(X, meta, copy=False)
        self.prototypes_ = build_supervised(table, classes)
        self.classes_ = np.asarray(classes, dtype=object)
        self.n_features_in_ = X.shape[1]
        return self


class ZeroShotClassifier(_ScoringMixin, ClassifierMixin, BaseEstimator):
    """Anchors-as-prototypes baseline: fit stores one text embedding per class."""

    def __init__(self, temperature: float = 1.0):
        self.temperature = temperature

    def fit(self, X, y):
        X = check_embeddings(X)
        classes = [str(c) for c in y]
        if len(classes) != X.shape[0]:
            raise ContractError(f"{len(classes)} class names for {X.shape[0]} anchors")
        anchors = EmbeddingTable(X, [RowMeta(id=c) for c in classes], copy=False)
        self.anchors_ = anchors
        self.prototypes_ = PrototypeSet(
            classes, X,
            [PrototypeProvenance(anchor_id=c, members=[], k=0) for c in classes],
        )
        self.classes_ = np.asarray(classes, dtype=object)
        self.n_features_in_ = X.shape[1]
        return self

    def multilabel_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "anchors_")
        queries = _as_table(check_embeddings(X, self.anchors_.dim), "q")
        return zero_shot_multi(queries, self.anchors_).scores

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "anchors_")
        queries = _as_table(check_embeddings(X, self.anchors_.dim), "q")
        labels, _ = zero_shot_single(queries, self.anchors_, self.temperature)
        return np.asarray(labels, dtype=object)

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "anchors_")
        queries = _as_table(check_embeddings(X, self.anchors_.dim), "q")
        _, matrix = zero_shot_single(queries, self.anchors_, self.temperature)
        return matrix.scores
