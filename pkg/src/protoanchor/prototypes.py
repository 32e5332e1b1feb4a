"""Build class prototypes: text-anchored kNN cluster centroids or label-grouped centroids.

A text anchor retrieves its k nearest audio rows; the L2-normalized mean of
that cluster becomes the class prototype. Clusters of different classes may
overlap. The supervised variant groups audio rows by their ground-truth
labels instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BoundsError,
    ConsistencyError,
    ContractError,
    DegenerateVectorError,
    EmptyClassError,
    FormatError,
)
from .search import knn
from .store import EmbeddingTable, read_embt, write_embt

SUPERVISED_ANCHOR = "supervised"

_CENTROID_NORM_FLOOR = 1e-9


@dataclass(frozen=True)
class PrototypeProvenance:
    """Where one prototype came from: its anchor, cluster members, and k."""

    anchor_id: str
    members: list[int]
    k: int


class PrototypeSet:
    """One L2-normalized centroid per class, with per-class provenance."""

    def __init__(self, class_names: list[str], vectors: np.ndarray,
                 provenance: list[PrototypeProvenance]):
        class_names = list(class_names)
        if len(set(class_names)) != len(class_names):
            raise ConsistencyError("class names must be unique")
        vectors = np.array(vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise ContractError(f"expected a 2-d vector matrix, got shape {vectors.shape}")
        if vectors.shape[0] != len(class_names) or len(provenance) != len(class_names):
            raise ConsistencyError(
                f"{len(class_names)} classes but {vectors.shape[0]} vectors "
                f"and {len(provenance)} provenance entries"
            )
        if vectors.shape[0]:
            norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-5):
                bad = int(np.argmax(np.abs(norms - 1.0)))
                raise ContractError(
                    f"prototype for {class_names[bad]!r} is not unit norm ({norms[bad]})"
                )
        vectors.flags.writeable = False
        self.class_names = class_names
        self.vectors = vectors
        self.provenance = list(provenance)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.class_names)


def _centroid(rows: np.ndarray, class_name: str) -> np.ndarray:
    mean = rows.astype(np.float64).mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm < _CENTROID_NORM_FLOOR:
        raise DegenerateVectorError(
            f"prototype for class {class_name!r} collapsed to norm {norm}"
        )
    if abs(norm - 1.0) <= 1e-6:
        return mean.astype(np.float32)
    return (mean / norm).astype(np.float32)


def build_text_anchored(text_table: EmbeddingTable, audio_table: EmbeddingTable,
                        k: int) -> PrototypeSet:
    """Prototypes from text anchors: per anchor, centroid of its k nearest audio rows.

    Class names and order come from the text table ids. Raises BoundsError
    for k outside [1, len(audio_table)].
    """
    if text_table.dim != audio_table.dim:
        raise ContractError(
            f"dimension mismatch: text {text_table.dim} vs audio {audio_table.dim}"
        )
    if not 1 <= k <= len(audio_table):
        raise BoundsError(f"k must be in [1, {len(audio_table)}], got {k}")
    names, vectors, provenance = [], [], []
    for row, meta in zip(text_table.rows, text_table.meta):
        neighbors = knn(row, audio_table, k)
        members = [nb.row for nb in neighbors]
        if k == 1:
            # Centroid of a single point is that point, bit-exact.
            vec = audio_table.rows[members[0]].copy()
        else:
            vec = _centroid(audio_table.rows[members], meta.id)
        names.append(meta.id)
        vectors.append(vec)
        provenance.append(PrototypeProvenance(anchor_id=meta.id, members=members, k=k))
    stacked = np.stack(vectors) if vectors else np.zeros((0, audio_table.dim), np.float32)
    return PrototypeSet(names, stacked, provenance)


def build_supervised(audio_table: EmbeddingTable, class_names: list[str]) -> PrototypeSet:
    """Prototypes from labels: per class, centroid of every row labeled with it."""
    names, vectors, provenance = [], [], []
    for name in class_names:
        members = [
            i for i, m in enumerate(audio_table.meta)
            if m.labels is not None and name in m.labels
        ]
        if not members:
            raise EmptyClassError(f"no rows labeled {name!r}")
        if len(members) == 1:
            vec = audio_table.rows[members[0]].copy()
        else:
            vec = _centroid(audio_table.rows[members], name)
        names.append(name)
        vectors.append(vec)
        provenance.append(
            PrototypeProvenance(anchor_id=SUPERVISED_ANCHOR, members=members, k=len(members))
        )
    stacked = np.stack(vectors) if vectors else np.zeros((0, audio_table.dim), np.float32)
    return PrototypeSet(names, stacked, provenance)


def save_prototypes(protos: PrototypeSet, matrix_path, meta_path) -> None:
    """Persist as EMBT vectors plus a JSONL sidecar with provenance fields."""
    write_embt(matrix_path, protos.vectors)
    try:
        with open(meta_path, "w", encoding="utf-8", newline="\n") as f:
            for name, prov in zip(protos.class_names, protos.provenance):
                obj = {
                    "id": name,
                    "members": list(prov.members),
                    "k": prov.k,
                    "anchor_id": prov.anchor_id,
                }
                f.write(json.dumps(obj, ensure_ascii=False) + "\n")
    except OSError as e:
        raise OSError(f"cannot write prototype metadata {meta_path}: {e}") from e


def load_prototypes(matrix_path, meta_path) -> PrototypeSet:
    """Load a persisted PrototypeSet."""
    vectors = read_embt(matrix_path)
    try:
        text = Path(meta_path).read_text(encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot read prototype metadata {meta_path}: {e}") from e
    names, provenance = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"{meta_path}:{lineno}: invalid JSON: {e}") from e
        try:
            names.append(obj["id"])
            provenance.append(PrototypeProvenance(
                anchor_id=obj["anchor_id"],
                members=[int(x) for x in obj["members"]],
                k=int(obj["k"]),
            ))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"{meta_path}:{lineno}: bad prototype record: {e}") from e
    if len(names) != vectors.shape[0]:
        raise ConsistencyError(
            f"{matrix_path} has {vectors.shape[0]} vectors but {meta_path} has {len(names)} entries"
        )
    return PrototypeSet(names, vectors, provenance)
