"""Core domain types and the ordinal scoring rules shared by every stage.

The three-level quality scale, its numeric mapping, and the aggregation
helpers live here so that evaluators, verifiers and analyses agree on one
truth domain. All types are immutable values; all functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import TYPE_CHECKING, Iterable, Union

if TYPE_CHECKING:
    from .extraction import ClaimEntities, EntityAnnotation

ATOMICITY = "atomicity"
SUFFICIENCY = "sufficiency"
FABRICATION = "fabrication"
COVERAGE = "coverage"
REDUNDANCY = "redundancy"
READABILITY = "readability"

ALL_METRICS = (ATOMICITY, SUFFICIENCY, FABRICATION, COVERAGE, REDUNDANCY, READABILITY)

# Coverage and redundancy judge the sub-claim set as a whole; the other four
# score each sub-claim and aggregate.
CLAIM_LEVEL_METRICS = frozenset({COVERAGE, REDUNDANCY})
PER_SUBCLAIM_METRICS = frozenset(ALL_METRICS) - CLAIM_LEVEL_METRICS

SOURCE_STATISTICAL = "statistical"
SOURCE_LLM = "llm"


class FactLensError(Exception):
    """Base class for all errors raised by this package."""


class OrdinalScore(IntEnum):
    """Three-level ordinal quality score, Low < Medium < High."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def text(self) -> str:
        return self.name.lower()

    @classmethod
    def from_text(cls, text: str) -> "OrdinalScore":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"not an ordinal score: {text!r}") from None


class AtomicityLabel(IntEnum):
    """Atomicity scale, NonAtomic2 < NonAtomic1 < Atomic."""

    NON_ATOMIC_2 = 1
    NON_ATOMIC_1 = 2
    ATOMIC = 3

    @property
    def text(self) -> str:
        return self.name.lower().replace("_", "-")

    @classmethod
    def from_text(cls, text: str) -> "AtomicityLabel":
        key = text.strip().replace("-", "_").upper()
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"not an atomicity label: {text!r}") from None


Label = Union[OrdinalScore, AtomicityLabel]


def label_from_text(metric: str, text: str) -> Label:
    """Parse a serialized label for the given metric."""
    if metric == ATOMICITY:
        return AtomicityLabel.from_text(text)
    return OrdinalScore.from_text(text)


def ordinal_to_numeric(score: Label) -> int:
    """Map a label to its 1/2/3 code.

    Low/NonAtomic2 -> 1, Medium/NonAtomic1 -> 2, High/Atomic -> 3; strictly
    monotone in the ordinal order of each scale.
    """
    return int(score)


def aggregate_numeric(scores: Iterable[int]) -> float:
    """Arithmetic mean of 1/2/3 codes; order-invariant, bounded by [1, 3]."""
    values = list(scores)
    if not values:
        raise ValueError("empty score list")
    for value in values:
        if value not in (1, 2, 3):
            raise ValueError(f"score {value!r} outside {{1, 2, 3}}")
    return sum(int(v) for v in values) / len(values)


def numeric_to_level(mean: float) -> OrdinalScore:
    """Round an aggregated mean in [1, 3] to the nearest level, ties up.

    [1, 1.5) -> Low, [1.5, 2.5) -> Medium, [2.5, 3] -> High.
    """
    if not 1.0 <= mean <= 3.0:
        raise ValueError(f"mean {mean} outside [1, 3]")
    if mean < 1.5:
        return OrdinalScore.LOW
    if mean < 2.5:
        return OrdinalScore.MEDIUM
    return OrdinalScore.HIGH


@dataclass(frozen=True)
class ClaimRecord:
    """One benchmark instance: a claim, its evidence, and the gold label."""

    id: str
    claim: str
    evidence: str
    gold_label: bool
    source: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("claim record id must be non-empty")
        if not self.claim.strip():
            raise ValueError(f"claim text must be non-empty (record {self.id!r})")


@dataclass(frozen=True)
class Decomposition:
    """Ordered sub-claims generated for one claim, with provenance."""

    claim_id: str
    sub_claims: tuple[str, ...]
    generator: str
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "sub_claims", tuple(self.sub_claims))
        if not self.sub_claims:
            raise ValueError(f"decomposition of {self.claim_id!r} has no sub-claims")
        if any(not s for s in self.sub_claims):
            raise ValueError(f"decomposition of {self.claim_id!r} contains an empty sub-claim")

    @property
    def n(self) -> int:
        return len(self.sub_claims)


@dataclass(frozen=True)
class EvaluationDiagnostics:
    """Raw counts and annotations behind the statistical scores."""

    fab: int | None = None
    red: int | None = None
    relation_free_subclaims: tuple[int, ...] = ()
    claim_entities: "ClaimEntities | None" = None
    subclaim_annotations: "tuple[EntityAnnotation, ...] | None" = None


@dataclass(frozen=True)
class EvaluationReport:
    """Per-sub-claim and claim-level quality scores for one decomposition.

    Each metric appears exactly once, either in ``per_subclaim`` (one label
    per sub-claim) or in ``claim_level`` (a single label for the whole set).
    ``means`` holds the aggregated 1-3 numeric score per metric and
    ``sources`` records which evaluator produced it.
    """

    claim_id: str
    n_subclaims: int
    per_subclaim: dict[str, tuple[Label, ...]]
    claim_level: dict[str, OrdinalScore]
    means: dict[str, float]
    sources: dict[str, str]
    diagnostics: EvaluationDiagnostics = field(default_factory=EvaluationDiagnostics)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "per_subclaim", {m: tuple(v) for m, v in self.per_subclaim.items()}
        )
        if self.n_subclaims < 1:
            raise ValueError("a report needs at least one sub-claim")
        overlap = set(self.per_subclaim) & set(self.claim_level)
        if overlap:
            raise ValueError(f"metrics scored at both scopes: {sorted(overlap)}")
        present = set(self.per_subclaim) | set(self.claim_level)
        unknown = present - set(ALL_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")
        for metric, labels in self.per_subclaim.items():
            if len(labels) != self.n_subclaims:
                raise ValueError(
                    f"{metric}: expected {self.n_subclaims} sub-claim scores, got {len(labels)}"
                )
        if set(self.means) != present or set(self.sources) != present:
            raise ValueError("means and sources must cover exactly the scored metrics")
        for metric, mean in self.means.items():
            if not 1.0 <= mean <= 3.0:
                raise ValueError(f"{metric}: mean {mean} outside [1, 3]")
        for metric, source in self.sources.items():
            if source not in (SOURCE_STATISTICAL, SOURCE_LLM):
                raise ValueError(f"{metric}: unknown score source {source!r}")

    @property
    def metrics(self) -> tuple[str, ...]:
        """Scored metrics in canonical order."""
        present = set(self.per_subclaim) | set(self.claim_level)
        return tuple(m for m in ALL_METRICS if m in present)


@dataclass(frozen=True)
class VerificationOutcome:
    """Per-sub-claim verdicts and their conjunction for one claim."""

    claim_id: str
    subclaim_labels: tuple[bool, ...]
    aggregated_label: bool
    holistic_label: bool | None = None
    rationales: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "subclaim_labels", tuple(self.subclaim_labels))
        if self.rationales is not None:
            object.__setattr__(self, "rationales", tuple(self.rationales))
        if not self.subclaim_labels:
            raise ValueError(f"no sub-claim labels for {self.claim_id!r}")
        if self.aggregated_label != all(self.subclaim_labels):
            raise ValueError("aggregated label must be the conjunction of the sub-claim labels")
        if self.rationales is not None and len(self.rationales) != len(self.subclaim_labels):
            raise ValueError("one rationale per sub-claim label expected")

    @property
    def n_subclaims(self) -> int:
        return len(self.subclaim_labels)
