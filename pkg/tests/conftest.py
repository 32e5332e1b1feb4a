import numpy as np
import pytest

from protoanchor import EmbeddingTable, RowMeta


def make_table(rows, ids=None, labels=None, folds=None) -> EmbeddingTable:
    """Build a table from raw (unnormalized) rows with lightweight metadata."""
    rows = np.asarray(rows, dtype=np.float32)
    n = rows.shape[0]
    ids = ids or [f"r{i}" for i in range(n)]
    meta = [
        RowMeta(
            id=ids[i],
            labels=None if labels is None else labels[i],
            fold=None if folds is None else folds[i],
        )
        for i in range(n)
    ]
    return EmbeddingTable(rows, meta)


@pytest.fixture
def two_row_table():
    return make_table([[1.0, 0.0], [0.0, 2.0]], ids=["a", "b"])
