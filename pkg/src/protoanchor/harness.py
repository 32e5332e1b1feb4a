"""End-to-end evaluation: cross-validated pipelines, sweeps, and synthetic data.

The synthetic generator stands in for real benchmark embeddings: class means
on the unit sphere, audio rows and text anchors as normalized noisy copies,
folds assigned round-robin. It makes every pipeline and metric testable
without pretrained encoders, and doubles as its own oracle (same seed, same
tables, bit for bit).
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, MissingEmbeddingError
from .heads import (
    HEADS,
    classify_single,
    score_multi,
    zero_shot_multi,
    zero_shot_single,
)
from .metrics import EvalReport, fold_accuracy, mean_average_precision
from .prompts import PromptTemplate, render_prompts
from .prototypes import build_text_anchored
from .store import EmbeddingTable, RowMeta, normalize_rows

POOL_POLICIES = ("train_folds_only", "all_audio")

TRAIN_FOLD = 0  # fixed-split semantics for multi-label data
TEST_FOLD = 1


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic embedding task."""

    n_classes: int
    dim: int
    per_class: int
    audio_noise: float
    anchor_noise: float
    seed: int
    multilabel_overlap: float = 0.0
    n_folds: int = 5

    def __post_init__(self):
        if self.n_classes < 1:
            raise ContractError("n_classes must be >= 1")
        if self.dim < 2:
            raise ContractError("dim must be >= 2")
        if self.per_class < 1:
            raise ContractError("per_class must be >= 1")
        if self.audio_noise < 0 or self.anchor_noise < 0:
            raise ContractError("noise levels must be non-negative")
        if not 0.0 <= self.multilabel_overlap < 1.0:
            raise ContractError("multilabel_overlap must be in [0, 1)")
        if self.n_folds < 1:
            raise ContractError("n_folds must be >= 1")


@dataclass(frozen=True)
class SynthData:
    """Generated tables plus the ground truth that produced them."""

    audio: EmbeddingTable
    text: EmbeddingTable
    truth: np.ndarray  # queries x classes one-hot
    class_means: np.ndarray
    class_names: list[str]


def _unit(rows: np.ndarray) -> np.ndarray:
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def generate_synthetic(spec: SynthSpec) -> SynthData:
    """Deterministic synthetic task: same seed, bit-identical tables.

    Audio rows are normalize(mean_c + noise); anchors are the same with
    ``anchor_noise`` in place of ``audio_noise``. Noise is isotropic
    Gaussian scaled so that a noise level s yields expected noise norm s
    relative to the unit-norm class mean, independent of dimension. With
    probability ``multilabel_overlap`` a clip gains a second class and its
    embedding becomes the normalized mean of one draw from each class.
    """
    rng = np.random.default_rng(spec.seed)
    c, d, n = spec.n_classes, spec.dim, spec.n_classes * spec.per_class
    audio_scale = spec.audio_noise / np.sqrt(d)
    anchor_scale = spec.anchor_noise / np.sqrt(d)

    # All randomness is drawn up front in a fixed order so that outcomes of
    # the overlap coins cannot shift later draws.
    means = _unit(rng.standard_normal((c, d)))
    anchor_g = rng.standard_normal((c, d))
    audio_g = rng.standard_normal((n, d))
    overlap_coin = rng.random(n)
    second_pick = rng.integers(0, max(c - 1, 1), size=n)
    second_g = rng.standard_normal((n, d))

    anchors = _unit(means + anchor_scale * anchor_g)

    own = np.repeat(np.arange(c), spec.per_class)
    primary = _unit(means[own] + audio_scale * audio_g)
    class_names = [f"class_{i:03d}" for i in range(c)]

    rows = np.empty((n, d))
    truth = np.zeros((n, c), dtype=np.int8)
    meta = []
    for i in range(n):
        labels = [class_names[own[i]]]
        truth[i, own[i]] = 1
        if c > 1 and overlap_coin[i] < spec.multilabel_overlap:
            other = int(second_pick[i])
            if other >= own[i]:
                other += 1
            extra = means[other] + audio_scale * second_g[i]
            extra = extra / np.linalg.norm(extra)
            mixed = (primary[i] + extra) / 2.0
            rows[i] = mixed / np.linalg.norm(mixed)
            labels.append(class_names[other])
            truth[i, other] = 1
        else:
            rows[i] = primary[i]
        meta.append(RowMeta(id=f"clip_{i:06d}", labels=labels, fold=i % spec.n_folds))

    audio = EmbeddingTable(rows.astype(np.float32), meta)
    text = EmbeddingTable(
        anchors.astype(np.float32),
        [RowMeta(id=name) for name in class_names],
    )
    return SynthData(audio, text, truth, means, class_names)


def _require_single_label_folds(audio: EmbeddingTable):
    for m in audio.meta:
        if m.fold is None:
            raise ContractError(f"row {m.id!r} has no fold; single-label heads need folds")
        if m.labels is None or len(m.labels) != 1:
            raise ContractError(
                f"row {m.id!r} must have exactly one label for single-label evaluation"
            )


def _one_hot(queries: EmbeddingTable, class_names: list[str]) -> np.ndarray:
    index = {name: j for j, name in enumerate(class_names)}
    truth = np.zeros((len(queries), len(class_names)), dtype=np.int8)
    for i, m in enumerate(queries.meta):
        for label in m.labels or []:
            if label not in index:
                raise ContractError(f"label {label!r} on row {m.id!r} is not a known class")
            truth[i, index[label]] = 1
    return truth


def run_pipeline(audio: EmbeddingTable, text: EmbeddingTable, k: int | None,
                 head: str, pool_policy: str = "train_folds_only",
                 folds: list[int] | None = None, temperature: float = 1.0,
                 config: dict | None = None) -> EvalReport:
    """Evaluate one configuration end to end.

    Single-label heads cross-validate over the audio table's folds: per
    evaluation fold, prototypes are built from the pool chosen by
    ``pool_policy`` and that fold's rows are classified. Multi-label heads
    use the fixed split (fold 0 = train pool, fold 1 = test) and report mAP.
    """
    if head not in HEADS:
        raise ContractError(f"head must be one of {HEADS}, got {head!r}")
    if pool_policy not in POOL_POLICIES:
        raise ContractError(f"pool_policy must be one of {POOL_POLICIES}, got {pool_policy!r}")

    full_config = {
        "k": k,
        "head": head,
        "pool_policy": pool_policy,
        "temperature": temperature,
    }
    full_config.update(config or {})

    if head.endswith("_single"):
        _require_single_label_folds(audio)
        fold_ids = folds if folds is not None else audio.folds()
        all_preds: list[str] = []
        all_truth: list[str] = []
        all_folds: list[int] = []
        for fid in fold_ids:
            query_idx = [i for i, m in enumerate(audio.meta) if m.fold == fid]
            if not query_idx:
                raise ContractError(f"fold {fid} has no rows")
            queries = audio.subset(query_idx)
            if head == "proto_single":
                if pool_policy == "train_folds_only":
                    pool_idx = [i for i, m in enumerate(audio.meta) if m.fold != fid]
                    pool = audio.subset(pool_idx)
                else:
                    pool = audio
                protos = build_text_anchored(text, pool, k)
                preds, _ = classify_single(queries, protos, temperature)
            else:
                preds, _ = zero_shot_single(queries, text, temperature)
            all_preds.extend(preds)
            all_truth.extend(m.labels[0] for m in queries.meta)
            all_folds.extend([fid] * len(queries))
        return fold_accuracy(all_preds, all_truth, all_folds, config=full_config)

    # multi-label: fixed train/test split via the fold field
    query_idx = [i for i, m in enumerate(audio.meta) if m.fold == TEST_FOLD]
    if not query_idx:
        raise ContractError(f"no test rows (fold {TEST_FOLD}) for multi-label evaluation")
    queries = audio.subset(query_idx)
    if head == "proto_multi":
        if pool_policy == "train_folds_only":
            pool_idx = [i for i, m in enumerate(audio.meta) if m.fold == TRAIN_FOLD]
            pool = audio.subset(pool_idx)
        else:
            pool = audio
        protos = build_text_anchored(text, pool, k)
        matrix = score_multi(queries, protos)
        class_names = protos.class_names
    else:
        matrix = zero_shot_multi(queries, text)
        class_names = text.ids
    truth = _one_hot(queries, class_names)
    return mean_average_precision(matrix, truth, config=full_config, fold_id=TEST_FOLD)


def resolve_threads(requested: int | None = None) -> int:
    """Worker count: PROTO_ANCHOR_THREADS env var wins, then the argument, then all cores."""
    env = os.environ.get("PROTO_ANCHOR_THREADS")
    if env is not None:
        value = int(env)
        if value < 1:
            raise ContractError(f"PROTO_ANCHOR_THREADS must be >= 1, got {value}")
        return value
    if requested is not None:
        if requested < 1:
            raise ContractError(f"thread count must be >= 1, got {requested}")
        return requested
    return os.cpu_count() or 1


def sweep_k(audio: EmbeddingTable, text: EmbeddingTable, k_values: list[int],
            head: str, pool_policy: str = "train_folds_only",
            folds: list[int] | None = None, temperature: float = 1.0,
            threads: int | None = None,
            config: dict | None = None) -> list[tuple[int, float]]:
    """One pipeline run per cluster size; results in the given k order."""
    if not k_values:
        raise ContractError("k_values must be non-empty")

    def one(k):
        return run_pipeline(audio, text, k, head, pool_policy, folds=folds,
                            temperature=temperature, config=config).aggregate

    workers = resolve_threads(threads)
    if workers == 1 or len(k_values) == 1:
        return [(k, one(k)) for k in k_values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        values = list(pool.map(one, k_values))
    return list(zip(list(k_values), values))


def sweep_prompts(audio: EmbeddingTable, label_names: list[str],
                  templates: list[PromptTemplate], embed_lookup: dict[str, np.ndarray],
                  head: str, k: int = 35, pool_policy: str = "train_folds_only",
                  folds: list[int] | None = None,
                  temperature: float = 1.0) -> list[tuple[PromptTemplate, float]]:
    """Evaluate each prompt template, best metric first.

    ``embed_lookup`` maps every rendered prompt string to its text embedding;
    a missing entry raises MissingEmbeddingError naming the string.
    """
    results = []
    for template in templates:
        rendered = render_prompts(label_names, template)
        vectors = []
        for text in rendered:
            if text not in embed_lookup:
                raise MissingEmbeddingError(f"no embedding for rendered prompt {text!r}")
            vectors.append(np.asarray(embed_lookup[text], dtype=np.float32))
        table = EmbeddingTable(
            normalize_rows(np.stack(vectors)),
            [RowMeta(id=name) for name in label_names],
        )
        report = run_pipeline(audio, table, k, head, pool_policy, folds=folds,
                              temperature=temperature)
        results.append((template, report.aggregate))
    return sorted(results, key=lambda pair: -pair[1])


def write_sweep_csv(rows: list[tuple], path, header: tuple[str, str]) -> None:
    """CSV with '.' decimals, UTF-8, LF endings."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for key, value in rows:
                writer.writerow([key, repr(float(value))])
    except OSError as e:
        raise OSError(f"cannot write sweep CSV {path}: {e}") from e
