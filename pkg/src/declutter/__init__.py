"""Declutter: strip publisher/journal/author boilerplate out of English
scientific abstracts, score any cleaner token-by-token against gold labels,
and measure how cleaning shifts embedding-based similarity rankings."""

from .corpus import (
    AbstractMeta,
    CorpusStats,
    LabeledAbstract,
    compute_stats,
    load_corpus,
    save_corpus,
)
from .detectors import (
    CATEGORY_REGISTRY,
    Detection,
    DetectorConfig,
    detect,
    load_predictions,
    to_rem_spans,
)
from .embedding import (
    CLEANED_ID_SUFFIX,
    BuiltinProvider,
    EmbeddingVector,
    ExternalVectorProvider,
    RankingDelta,
    cosine,
    embed_text,
    rank_references,
)
from .errors import (
    CorpusError,
    DeclutterError,
    DetectorError,
    EmbeddingError,
    EvaluationError,
)
from .evaluation import (
    AbstractOutcome,
    EvalReport,
    LengthBucketRow,
    aggregate,
    length_buckets,
    score_abstract,
    token_prf,
)
from .textspan import (
    REM_LABEL,
    Span,
    Token,
    TokenMap,
    clean_text,
    ensure_finalized,
    filter_spans,
    tokenize,
    tokens_under,
)

__version__ = "0.1.0"

__all__ = [
    "AbstractMeta",
    "AbstractOutcome",
    "BuiltinProvider",
    "CATEGORY_REGISTRY",
    "CLEANED_ID_SUFFIX",
    "CorpusError",
    "CorpusStats",
    "DeclutterError",
    "Detection",
    "DetectorConfig",
    "DetectorError",
    "EmbeddingError",
    "EmbeddingVector",
    "EvalReport",
    "EvaluationError",
    "ExternalVectorProvider",
    "LabeledAbstract",
    "LengthBucketRow",
    "REM_LABEL",
    "RankingDelta",
    "Span",
    "Token",
    "TokenMap",
    "aggregate",
    "clean_text",
    "compute_stats",
    "cosine",
    "detect",
    "embed_text",
    "ensure_finalized",
    "filter_spans",
    "length_buckets",
    "load_corpus",
    "load_predictions",
    "rank_references",
    "save_corpus",
    "score_abstract",
    "to_rem_spans",
    "token_prf",
    "tokenize",
    "tokens_under",
]
