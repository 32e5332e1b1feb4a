"""Exact cosine similarity and tie-broken k-nearest-neighbor retrieval.

All inputs are unit vectors (the store normalizes on load), so cosine is a
dot product. Rows are stored float32; scores accumulate in float64 and are
clamped to [-1, 1]. Ranking is total: descending score, ties broken by
ascending row index, so results are deterministic and independent of the
selection strategy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ContractError
from .store import EmbeddingTable


@dataclass(frozen=True)
class Neighbor:
    row: int
    score: float


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.clip(a @ b, -1.0, 1.0))


def similarity_matrix(queries: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Clamped cosine of every query row against every target row (float64)."""
    queries = np.asarray(queries)
    targets = np.asarray(targets)
    if queries.shape[1] != targets.shape[1]:
        raise ContractError(
            f"dimension mismatch: queries dim {queries.shape[1]} vs targets dim {targets.shape[1]}"
        )
    scores = queries.astype(np.float64) @ targets.astype(np.float64).T
    np.clip(scores, -1.0, 1.0, out=scores)
    return scores


def _scores_against(query: np.ndarray, table: EmbeddingTable) -> np.ndarray:
    query = np.asarray(query, dtype=np.float64)
    if query.ndim != 1 or query.shape[0] != table.dim:
        raise ContractError(
            f"query shape {query.shape} does not match table dim {table.dim}"
        )
    scores = table.rows.astype(np.float64) @ query
    np.clip(scores, -1.0, 1.0, out=scores)
    return scores


def _top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k best scores under (score desc, index asc)."""
    n = scores.shape[0]
    if k == n:
        return np.lexsort((np.arange(n), -scores))
    # Partition for the k-th largest value, then repair ties at the boundary
    # so the selected set matches the global tie rule exactly.
    part = np.argpartition(-scores, k - 1)[:k]
    kth_value = scores[part].min()
    above = np.flatnonzero(scores > kth_value)
    ties = np.flatnonzero(scores == kth_value)
    selected = np.concatenate([above, ties[: k - above.size]])
    order = np.lexsort((selected, -scores[selected]))
    return selected[order]


def knn(query: np.ndarray, table: EmbeddingTable, k: int) -> list[Neighbor]:
    """The k table rows most similar to the query, best first.

    Raises BoundsError unless 1 <= k <= len(table); no clamping.
    """
    n = len(table)
    if not 1 <= k <= n:
        raise BoundsError(f"k must be in [1, {n}], got {k}")
    scores = _scores_against(query, table)
    idx = _top_k(scores, k)
    return [Neighbor(int(i), float(scores[i])) for i in idx]


def rank_all(query: np.ndarray, table: EmbeddingTable) -> list[Neighbor]:
    """Full descending ranking of the table against the query."""
    if len(table) == 0:
        raise BoundsError("cannot rank an empty table")
    return knn(query, table, len(table))
