"""Embedding tables: the EMBT binary matrix format plus its JSONL metadata sidecar.

Layout of an EMBT file (all integers little-endian):

    magic "EMBT" | version u32 = 1 | count u64 | dim u32 | dtype u8 = 0
    | 3 reserved zero bytes | count*dim float32 values, row-major

The sidecar is JSONL with one object per row, aligned by line number:
``{"id": str, "labels": [str]?, "fold": int?}``. Unknown keys are tolerated
so that richer sidecars (e.g. prototype provenance) still load as tables.

Every row of a table is L2-normalized, so cosine similarity downstream is a
plain dot product.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, DegenerateVectorError, FormatError

MAGIC = b"EMBT"
VERSION = 1
_HEADER = struct.Struct("<4sIQIB3s")
HEADER_SIZE = _HEADER.size  # 24 bytes

# Rows whose norm is already within this tolerance of 1 are kept bit-exact,
# which makes write -> load round trips lossless. Well inside the 1e-5
# norm invariant.
_UNIT_SKIP_TOL = 1e-6


@dataclass(frozen=True)
class RowMeta:
    """Per-row metadata: unique id, optional ground-truth labels, optional fold."""

    id: str
    labels: list[str] | None = None
    fold: int | None = None


def normalize_rows(rows: np.ndarray, row_ids: list[str] | None = None) -> np.ndarray:
    """Return float32 rows scaled to unit L2 norm.

    Norms are accumulated in float64. Rows already within ``_UNIT_SKIP_TOL``
    of unit norm pass through unchanged so that normalization is idempotent
    at the bit level. A zero-norm row raises DegenerateVectorError naming
    the offending row.
    """
    rows = np.asarray(rows, dtype=np.float32)
    if rows.ndim != 2:
        raise FormatError(f"expected a 2-d row matrix, got shape {rows.shape}")
    if not np.all(np.isfinite(rows)):
        bad = int(np.flatnonzero(~np.isfinite(rows).all(axis=1))[0])
        name = row_ids[bad] if row_ids else f"row {bad}"
        raise FormatError(f"non-finite component in {name}")
    norms = np.linalg.norm(rows.astype(np.float64), axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        name = row_ids[bad] if row_ids else f"row {bad}"
        raise DegenerateVectorError(f"zero-norm embedding: {name}")
    needs = np.abs(norms - 1.0) > _UNIT_SKIP_TOL
    if not np.any(needs):
        return rows
    out = rows.copy()
    scaled = rows[needs].astype(np.float64) / norms[needs, None]
    out[needs] = scaled.astype(np.float32)
    return out


class EmbeddingTable:
    """Immutable matrix of L2-normalized embedding rows plus aligned metadata.

    Rows are float32 and marked read-only after construction, so any number
    of readers may share a table without synchronization.
    """

    def __init__(self, rows: np.ndarray, meta: list[RowMeta], *, copy: bool = True):
        rows = np.array(rows, dtype=np.float32, copy=copy)
        if rows.ndim != 2 or rows.shape[1] < 1:
            raise FormatError(f"expected an n x dim matrix with dim >= 1, got shape {rows.shape}")
        meta = list(meta)
        if len(meta) != rows.shape[0]:
            raise ConsistencyError(
                f"metadata length {len(meta)} does not match row count {rows.shape[0]}"
            )
        for m in meta:
            if not m.id:
                raise FormatError("row id must be non-empty")
            if m.fold is not None and m.fold < 0:
                raise FormatError(f"fold must be non-negative, got {m.fold} for id {m.id!r}")
        ids = [m.id for m in meta]
        if len(set(ids)) != len(ids):
            seen, dup = set(), None
            for i in ids:
                if i in seen:
                    dup = i
                    break
                seen.add(i)
            raise ConsistencyError(f"duplicate id {dup!r}")
        rows = normalize_rows(rows, ids)
        rows.flags.writeable = False
        self.rows = rows
        self.meta = meta

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.meta]

    def __len__(self) -> int:
        return self.rows.shape[0]

    def subset(self, indices) -> "EmbeddingTable":
        """New table with the selected rows, in the given order. Rows keep their bits."""
        indices = np.asarray(indices, dtype=np.intp)
        return EmbeddingTable(self.rows[indices], [self.meta[int(i)] for i in indices])

    def folds(self) -> list[int]:
        """Sorted distinct fold ids; raises if any row lacks one."""
        vals = set()
        for m in self.meta:
            if m.fold is None:
                raise ConsistencyError(f"row {m.id!r} has no fold assigned")
            vals.add(m.fold)
        return sorted(vals)


def write_embt(path, rows: np.ndarray) -> None:
    """Write a float32 matrix as an EMBT file."""
    rows = np.ascontiguousarray(rows, dtype=np.float32)
    n, dim = rows.shape
    header = _HEADER.pack(MAGIC, VERSION, n, dim, 0, b"\x00\x00\x00")
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(rows.astype("<f4", copy=False).tobytes())
    except OSError as e:
        raise OSError(f"cannot write matrix file {path}: {e}") from e


def read_embt(path) -> np.ndarray:
    """Read an EMBT file into a float32 matrix, validating the layout."""
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise OSError(f"cannot read matrix file {path}: {e}") from e
    if len(blob) < HEADER_SIZE:
        raise FormatError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    magic, version, count, dim, dtype, reserved = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype != 0:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    if reserved != b"\x00\x00\x00":
        raise FormatError(f"{path}: reserved bytes must be zero")
    if dim < 1:
        raise FormatError(f"{path}: dim must be >= 1, got {dim}")
    expected = count * dim * 4
    payload = blob[HEADER_SIZE:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    return rows.astype(np.float32, copy=True)


def write_meta(path, meta: list[RowMeta]) -> None:
    """Write the JSONL sidecar (UTF-8, LF endings)."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for m in meta:
                obj: dict = {"id": m.id}
                if m.labels is not None:
                    obj["labels"] = list(m.labels)
                if m.fold is not None:
                    obj["fold"] = m.fold
                f.write(json.dumps(obj, ensure_ascii=False) + "\n")
    except OSError as e:
        raise OSError(f"cannot write metadata file {path}: {e}") from e


def read_meta(path) -> list[RowMeta]:
    """Parse the JSONL sidecar into RowMeta entries (blank lines ignored)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot read metadata file {path}: {e}") from e
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}:{lineno}: invalid JSON: {e}") from e
        if not isinstance(obj, dict) or "id" not in obj:
            raise FormatError(f"{path}:{lineno}: each line needs an 'id' field")
        rid = obj["id"]
        if not isinstance(rid, str) or not rid:
            raise FormatError(f"{path}:{lineno}: 'id' must be a non-empty string")
        labels = obj.get("labels")
        if labels is not None:
            if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
                raise FormatError(f"{path}:{lineno}: 'labels' must be a list of strings")
        fold = obj.get("fold")
        if fold is not None:
            if isinstance(fold, bool) or not isinstance(fold, int) or fold < 0:
                raise FormatError(f"{path}:{lineno}: 'fold' must be a non-negative integer")
        out.append(RowMeta(id=rid, labels=labels, fold=fold))
    return out


def load_table(matrix_path, meta_path) -> EmbeddingTable:
    """Load and validate an EMBT matrix + JSONL sidecar into a normalized table."""
    rows = read_embt(matrix_path)
    meta = read_meta(meta_path)
    if len(meta) != rows.shape[0]:
        raise ConsistencyError(
            f"{matrix_path} has {rows.shape[0]} rows but {meta_path} has {len(meta)} entries"
        )
    return EmbeddingTable(rows, meta, copy=False)


def write_table(table: EmbeddingTable, matrix_path, meta_path) -> None:
    """Persist a table; load_table on the result reproduces it bit-exactly."""
    write_embt(matrix_path, table.rows)
    write_meta(meta_path, table.meta)
