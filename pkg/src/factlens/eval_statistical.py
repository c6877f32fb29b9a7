"""Statistical sub-claim quality metrics over entity sets and similarity.

Atomicity, fabrication, coverage and redundancy are computed from entity
annotations and pairwise text similarity. Sufficiency and readability have
no statistical formulation and are deliberately absent from this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .core import AtomicityLabel, OrdinalScore
from .extraction import ClaimEntities, EntityAnnotation

SimilarityFn = Callable[[str, str], float]


@dataclass(frozen=True)
class StatisticalConfig:
    """Free parameters of the statistical evaluator.

    ``similarity_threshold`` is the pairwise-similarity cutoff above which
    two sub-claims count as redundant; the banding limits split Medium from
    High for the fabrication count and the unordered redundant-pair count.
    """

    similarity_threshold: float = 0.9
    fab_medium_max: int = 2
    red_medium_max: int = 1

    def __post_init__(self) -> None:
        if not 0 < self.similarity_threshold <= 1:
            raise ValueError("similarity_threshold must be in (0, 1]")
        if self.fab_medium_max < 1:
            raise ValueError("fab_medium_max must be >= 1")
        if self.red_medium_max < 1:
            raise ValueError("red_medium_max must be >= 1")


@dataclass(frozen=True)
class StatisticalDiagnostics:
    """Raw counts behind the fabrication and redundancy scores.

    ``red`` counts ordered pairs; it is even whenever the similarity backend
    is symmetric.
    """

    fab: int
    red: int

    def __post_init__(self) -> None:
        if self.fab < 0 or self.red < 0:
            raise ValueError("diagnostic counts must be non-negative")


def score_atomicity(annotation: EntityAnnotation) -> AtomicityLabel:
    """Entity-count atomicity rule.

    Multiple subjects -> non-atomic-2; one subject with multiple objects ->
    non-atomic-1; otherwise atomic. Annotations without subjects (no
    extractable relation) are atomic; callers can flag them via
    ``EntityAnnotation.is_empty``.
    """
    if len(annotation.subjects) > 1:
        return AtomicityLabel.NON_ATOMIC_2
    if len(annotation.subjects) == 1 and len(annotation.objects) > 1:
        return AtomicityLabel.NON_ATOMIC_1
    return AtomicityLabel.ATOMIC


def score_fabrication(
    claim_entities: ClaimEntities,
    annotations: Sequence[EntityAnnotation],
    config: StatisticalConfig = StatisticalConfig(),
) -> tuple[OrdinalScore, int]:
    """Count entities the sub-claims introduce beyond the claim's own.

    fab sums, over sub-claims, the subjects absent from the claim's subject
    set plus the objects absent from its object set. fab = 0 is Low, up to
    ``fab_medium_max`` is Medium, beyond that High.
    """
    claim_subjects = set(claim_entities.subjects)
    claim_objects = set(claim_entities.objects)
    fab = 0
    for annotation in annotations:
        fab += len(set(annotation.subjects) - claim_subjects)
        fab += len(set(annotation.objects) - claim_objects)
    if fab == 0:
        level = OrdinalScore.LOW
    elif fab <= config.fab_medium_max:
        level = OrdinalScore.MEDIUM
    else:
        level = OrdinalScore.HIGH
    return level, fab


def score_coverage(
    claim_entities: ClaimEntities, annotations: Sequence[EntityAnnotation]
) -> OrdinalScore:
    """Check whether the sub-claims jointly preserve the claim's entities.

    High when the unions of sub-claim subjects and objects cover the claim's
    subject and object sets; Low when neither union overlaps its claim set;
    Medium otherwise.
    """
    union_subjects = set().union(*(set(a.subjects) for a in annotations))
    union_objects = set().union(*(set(a.objects) for a in annotations))
    claim_subjects = set(claim_entities.subjects)
    claim_objects = set(claim_entities.objects)
    if union_subjects >= claim_subjects and union_objects >= claim_objects:
        return OrdinalScore.HIGH
    if not (union_subjects & claim_subjects) and not (union_objects & claim_objects):
        return OrdinalScore.LOW
    return OrdinalScore.MEDIUM


def score_redundancy(
    sub_claims: Sequence[str],
    similarity: SimilarityFn,
    config: StatisticalConfig = StatisticalConfig(),
) -> tuple[OrdinalScore, int]:
    """Count sub-claim pairs whose similarity exceeds the threshold.

    ``red`` counts ordered pairs (i != j); the banding uses unordered pairs
    u = red / 2: u = 0 is Low, up to ``red_medium_max`` is Medium, beyond
    that High. A single sub-claim always scores (Low, 0).
    """
    if not sub_claims:
        raise ValueError("at least one sub-claim required")
    red = 0
    for i, first in enumerate(sub_claims):
        for j, second in enumerate(sub_claims):
            if i != j and similarity(first, second) > config.similarity_threshold:
                red += 1
    unordered = red / 2
    if unordered == 0:
        level = OrdinalScore.LOW
    elif unordered <= config.red_medium_max:
        level = OrdinalScore.MEDIUM
    else:
        level = OrdinalScore.HIGH
    return level, red
