"""Text-anchored prototypical classification over joint audio-text embedding spaces."""

from .errors import (
    BoundsError,
    ConsistencyError,
    ContractError,
    DegenerateVectorError,
    EmptyClassError,
    FormatError,
    MissingEmbeddingError,
    ProtoAnchorError,
    UndefinedMetricError,
)
from .estimators import (
    SupervisedPrototypeClassifier,
    TextAnchoredPrototypeClassifier,
    ZeroShotClassifier,
    check_embeddings,
)
from .harness import (
    SynthData,
    SynthSpec,
    generate_synthetic,
    run_pipeline,
    sweep_k,
    sweep_prompts,
    write_sweep_csv,
)
from .heads import (
    ScoreMatrix,
    classify_single,
    score_multi,
    write_predictions,
    zero_shot_multi,
    zero_shot_single,
)
from .metrics import EvalReport, average_precision, fold_accuracy, mean_average_precision
from .prompts import DEFAULT_TEMPLATE, STANDARD_TEMPLATES, PromptTemplate, render_prompts
from .prototypes import (
    PrototypeProvenance,
    PrototypeSet,
    build_supervised,
    build_text_anchored,
    load_prototypes,
    save_prototypes,
)
from .search import Neighbor, cosine, knn, rank_all, similarity_matrix
from .store import (
    EmbeddingTable,
    RowMeta,
    load_table,
    normalize_rows,
    read_embt,
    write_embt,
    write_table,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsError",
    "ConsistencyError",
    "ContractError",
    "DegenerateVectorError",
    "EmbeddingTable",
    "EmptyClassError",
    "EvalReport",
    "FormatError",
    "MissingEmbeddingError",
    "Neighbor",
    "PromptTemplate",
    "PrototypeProvenance",
    "PrototypeSet",
    "ProtoAnchorError",
    "RowMeta",
    "ScoreMatrix",
    "SupervisedPrototypeClassifier",
    "SynthData",
    "SynthSpec",
    "TextAnchoredPrototypeClassifier",
    "UndefinedMetricError",
    "ZeroShotClassifier",
    "average_precision",
    "build_supervised",
    "build_text_anchored",
    "check_embeddings",
    "classify_single",
    "cosine",
    "DEFAULT_TEMPLATE",
    "fold_accuracy",
    "generate_synthetic",
    "knn",
    "load_prototypes",
    "load_table",
    "mean_average_precision",
    "normalize_rows",
    "rank_all",
    "read_embt",
    "render_prompts",
    "run_pipeline",
    "save_prototypes",
    "score_multi",
    "similarity_matrix",
    "STANDARD_TEMPLATES",
    "sweep_k",
    "sweep_prompts",
    "write_embt",
    "write_predictions",
    "write_sweep_csv",
    "write_table",
    "zero_shot_multi",
    "zero_shot_single",
]
