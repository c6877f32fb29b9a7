"""Fine-grained fact verification toolkit.

Decomposes claims into sub-claims, scores decomposition quality on six
metrics with an ensemble of statistical and LLM-based evaluators, verifies
sub-claims against provided evidence, and analyzes how sub-claim quality
relates to verification performance.
"""

from .core import (
    ALL_METRICS,
    AtomicityLabel,
    ClaimRecord,
    Decomposition,
    EvaluationReport,
    FactLensError,
    OrdinalScore,
    VerificationOutcome,
    aggregate_numeric,
    numeric_to_level,
    ordinal_to_numeric,
)
from .decomposer import Decomposer, DemonstrationSet
from .eval_ensemble import Evaluator, summarize_reports
from .eval_llm import LlmJudge, MetricKind
from .eval_statistical import StatisticalConfig
from .extraction import EntityExtractor, normalize_entity
from .providers import (
    ChatRequest,
    HttpChatProvider,
    MockChatProvider,
    ProviderConfig,
    ResponseCache,
    token_overlap_similarity,
)
from .verifier import Verifier, aggregate_labels

__version__ = "0.1.0"

__all__ = [
    "ALL_METRICS",
    "AtomicityLabel",
    "ChatRequest",
    "ClaimRecord",
    "Decomposer",
    "Decomposition",
    "DemonstrationSet",
    "EntityExtractor",
    "EvaluationReport",
    "Evaluator",
    "FactLensError",
    "HttpChatProvider",
    "LlmJudge",
    "MetricKind",
    "MockChatProvider",
    "OrdinalScore",
    "ProviderConfig",
    "ResponseCache",
    "StatisticalConfig",
    "VerificationOutcome",
    "Verifier",
    "aggregate_labels",
    "aggregate_numeric",
    "normalize_entity",
    "numeric_to_level",
    "ordinal_to_numeric",
    "summarize_reports",
    "token_overlap_similarity",
    "__version__",
]
