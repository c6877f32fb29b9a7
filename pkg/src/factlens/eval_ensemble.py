"""Metric routing between the statistical and LLM evaluators.

The default ensemble takes atomicity and coverage from the statistical
evaluator and the remaining four metrics from the judge model; the pure
modes exist for comparison. A report is only emitted when every requested
metric succeeded.
"""

from __future__ import annotations

from typing import Sequence

from . import core
from .core import (
    ClaimRecord,
    Decomposition,
    EvaluationDiagnostics,
    EvaluationReport,
    Label,
    OrdinalScore,
    aggregate_numeric,
)
from .eval_llm import EvaluationError, LlmJudge, MetricKind
from .eval_statistical import (
    SimilarityFn,
    StatisticalConfig,
    score_atomicity,
    score_coverage,
    score_fabrication,
    score_redundancy,
)
from .extraction import EntityExtractor, ExtractionError
from .providers import ProviderError, token_overlap_similarity

MODES = ("ensemble", "statistical", "llm")

# Metrics the judge scores in each mode (the rest come from the statistical
# evaluator; sufficiency and readability have no statistical form and are
# absent from pure-statistical reports).
_LLM_METRICS_BY_MODE = {
    "ensemble": (
        MetricKind.SUFFICIENCY,
        MetricKind.FABRICATION,
        MetricKind.REDUNDANCY,
        MetricKind.READABILITY,
    ),
    "llm": tuple(MetricKind),
    "statistical": (),
}


class Evaluator:
    """Produces EvaluationReports in ensemble, statistical, or llm mode."""

    def __init__(
        self,
        extractor: EntityExtractor | None = None,
        judge: LlmJudge | None = None,
        similarity: SimilarityFn = token_overlap_similarity,
        config: StatisticalConfig = StatisticalConfig(),
        mode: str = "ensemble",
    ) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        self._extractor = extractor
        self._judge = judge
        self._similarity = similarity
        self._config = config
        self._mode = mode

    def evaluate(
        self, claim: ClaimRecord, decomposition: Decomposition, mode: str | None = None
    ) -> EvaluationReport:
        """Score one decomposition; any sub-evaluator failure fails the instance."""
        mode = self._mode if mode is None else mode
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")

        per_subclaim: dict[str, tuple[Label, ...]] = {}
        claim_level: dict[str, OrdinalScore] = {}
        sources: dict[str, str] = {}
        diagnostics = EvaluationDiagnostics()

        if mode in ("ensemble", "statistical"):
            if self._extractor is None:
                raise EvaluationError(f"mode {mode!r} requires an entity extractor")
            diagnostics = self._statistical_scores(
                claim, decomposition, mode, per_subclaim, claim_level, sources
            )

        llm_metrics = _LLM_METRICS_BY_MODE[mode]
        if llm_metrics:
            if self._judge is None:
                raise EvaluationError(f"mode {mode!r} requires a judge")
            for metric in llm_metrics:
                result = self._judge.evaluate_metric(metric, claim.claim, decomposition)
                if metric.per_subclaim:
                    per_subclaim[metric.value] = tuple(result)
                else:
                    claim_level[metric.value] = result
                sources[metric.value] = core.SOURCE_LLM

        means: dict[str, float] = {}
        for metric, labels in per_subclaim.items():
            means[metric] = aggregate_numeric(int(label) for label in labels)
        for metric, level in claim_level.items():
            means[metric] = float(int(level))

        return EvaluationReport(
            claim_id=claim.id,
            n_subclaims=decomposition.n,
            per_subclaim=per_subclaim,
            claim_level=claim_level,
            means=means,
            sources=sources,
            diagnostics=diagnostics,
        )

    def _statistical_scores(
        self,
        claim: ClaimRecord,
        decomposition: Decomposition,
        mode: str,
        per_subclaim: dict[str, tuple[Label, ...]],
        claim_level: dict[str, OrdinalScore],
        sources: dict[str, str],
    ) -> EvaluationDiagnostics:
        try:
            claim_entities = self._extractor.entities_of_claim(claim.claim)
            annotations = tuple(
                self._extractor.extract_pairs(sub) for sub in decomposition.sub_claims
            )
        except (ExtractionError, ProviderError) as exc:
            raise EvaluationError(f"entity extraction failed for claim {claim.id!r}: {exc}") from exc

        per_subclaim[core.ATOMICITY] = tuple(score_atomicity(a) for a in annotations)
        sources[core.ATOMICITY] = core.SOURCE_STATISTICAL
        claim_level[core.COVERAGE] = score_coverage(claim_entities, annotations)
        sources[core.COVERAGE] = core.SOURCE_STATISTICAL

        fab_level, fab = score_fabrication(claim_entities, annotations, self._config)
        red: int | None = None
        if mode == "statistical":
            claim_level[core.FABRICATION] = fab_level
            sources[core.FABRICATION] = core.SOURCE_STATISTICAL
            red_level, red = score_redundancy(
                decomposition.sub_claims, self._similarity, self._config
            )
            claim_level[core.REDUNDANCY] = red_level
            sources[core.REDUNDANCY] = core.SOURCE_STATISTICAL

        return EvaluationDiagnostics(
            fab=fab,
            red=red,
            relation_free_subclaims=tuple(
                i for i, a in enumerate(annotations) if not a.subjects
            ),
            claim_entities=claim_entities,
            subclaim_annotations=annotations,
        )


def summarize_reports(reports: Sequence[EvaluationReport]) -> dict[str, float]:
    """Dataset-level mean of the claim-level numeric scores, per metric."""
    if not reports:
        raise ValueError("no reports to summarize")
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for report in reports:
        for metric, mean in report.means.items():
            totals[metric] = totals.get(metric, 0.0) + mean
            counts[metric] = counts.get(metric, 0) + 1
    return {
        metric: totals[metric] / counts[metric]
        for metric in core.ALL_METRICS
        if metric in totals
    }
