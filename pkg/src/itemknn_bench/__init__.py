"""Item-based KNN recommendation with pluggable similarity-matrix strategies,
scoring modes, and nDCG semantics, plus a deterministic experiment harness."""

from .errors import ContractError, ExperimentError, RowParseError, SchemaError
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    emit_report,
    run_experiment,
)
from .ingest import (
    DatasetStats,
    ImplicitThreshold,
    Interaction,
    InteractionDataset,
    load_interactions,
    save_interactions,
    stats,
    to_implicit,
)
from .knn import (
    SimilarityMatrix,
    UserItemMatrix,
    build_matrix,
    cosine_similarity,
    load_similarity,
    save_similarity,
    truncate_topk,
)
from .metrics import (
    IDCG_FIXED_K,
    IDCG_TRUNCATED,
    MetricReport,
    UserMetrics,
    dcg,
    evaluate,
    ndcg_at_n,
    precision_at_n,
    recall_at_n,
)
from .recommend import (
    PRESETS,
    Preset,
    RecommendationList,
    ScoringMode,
    recommend_all,
    recommend_topn,
    score_user,
)
from .split import SplitConfig, SplitMix64, SplitPair, split_holdout

__version__ = "0.1.0"
