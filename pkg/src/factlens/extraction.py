"""Subject/object pair extraction and entity normalization.

The statistical quality metrics compare entity sets between a claim and its
sub-claims; this module produces those sets by prompting the chat provider
and canonicalizing the returned surface strings for exact set membership.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import prompts
from .core import FactLensError
from .providers import ChatRequest

_EDGE_CHARS = string.punctuation + string.whitespace
_ARTICLE_PREFIXES = ("the ", "a ", "an ")
_ARTICLES = frozenset({"the", "a", "an"})
_LIST_MARK_RE = re.compile(r"^(?:[-*•]+|\d+[.)])\s*")


class ExtractionError(FactLensError):
    """The provider's extraction response could not be parsed."""


def normalize_entity(raw: str) -> str:
    """Canonicalize an entity string for exact set comparisons.

    Lowercases, collapses internal whitespace, strips surrounding punctuation
    and leading articles. Runs to a fixpoint, so the function is idempotent;
    all-whitespace input normalizes to the empty string.
    """
    text = re.sub(r"\s+", " ", raw.lower()).strip()
    while True:
        before = text
        text = text.strip(_EDGE_CHARS)
        if text in _ARTICLES:
            text = ""
        for prefix in _ARTICLE_PREFIXES:
            if text.startswith(prefix):
                text = text[len(prefix):]
                break
        if text == before:
            return text


def _canonical_unique(entries: Iterable[str]) -> tuple[str, ...]:
    seen: list[str] = []
    for entry in entries:
        canonical = normalize_entity(entry)
        if canonical and canonical not in seen:
            seen.append(canonical)
    return tuple(seen)


def _validate_canonical(entries: tuple[str, ...], kind: str) -> None:
    if len(set(entries)) != len(entries):
        raise ValueError(f"duplicate {kind} entries: {entries}")
    for entry in entries:
        if normalize_entity(entry) != entry:
            raise ValueError(f"{kind} entry {entry!r} is not canonical")


@dataclass(frozen=True)
class EntityAnnotation:
    """Canonical subject and object lists extracted from one text span."""

    subjects: tuple[str, ...]
    objects: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "objects", tuple(self.objects))
        _validate_canonical(self.subjects, "subject")
        _validate_canonical(self.objects, "object")

    @property
    def is_empty(self) -> bool:
        return not self.subjects and not self.objects

    @classmethod
    def from_raw(cls, subjects: Iterable[str], objects: Iterable[str]) -> "EntityAnnotation":
        """Normalize, drop empties, and deduplicate raw surface strings."""
        return cls(_canonical_unique(subjects), _canonical_unique(objects))


@dataclass(frozen=True)
class ClaimEntities:
    """Canonical subject and object sets of a whole claim."""

    subjects: tuple[str, ...]
    objects: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "objects", tuple(self.objects))
        _validate_canonical(self.subjects, "subject")
        _validate_canonical(self.objects, "object")


def build_extraction_prompt(text: str, prompts_dir: str | Path | None = None) -> str:
    template = prompts.load_text(prompts.EXTRACTION_TEMPLATE, prompts_dir)
    return prompts.fill(template, text=text)


def parse_pair_lines(raw: str) -> list[tuple[str, str]] | None:
    """Parse "subject | object" lines, tolerating list punctuation.

    Returns the pairs (possibly none, when the model answered NONE), or
    ``None`` when the response carries neither pairs nor a NONE marker.
    """
    pairs: list[tuple[str, str]] = []
    saw_none = False
    for line in raw.splitlines():
        line = _LIST_MARK_RE.sub("", line.strip()).strip("[]").strip("'\"").strip()
        if not line:
            continue
        if line.lower().rstrip(".") == "none":
            saw_none = True
            continue
        if "|" not in line:
            continue
        subject, obj = line.split("|", 1)
        pairs.append((subject, obj))
    if pairs or saw_none:
        return pairs
    return None


class EntityExtractor:
    """Extracts (subject, object) pairs from text via the chat provider.

    Stateless apart from its configuration; safe to share across threads.
    """

    def __init__(
        self,
        provider,
        model: str = "gpt-4o-mini",
        prompts_dir: str | Path | None = None,
        temperature: float = 0.0,
    ) -> None:
        self._provider = provider
        self._model = model
        self._temperature = temperature
        self._template = prompts.load_text(prompts.EXTRACTION_TEMPLATE, prompts_dir)

    def extract_pairs(self, text: str) -> EntityAnnotation:
        """Extract and canonicalize all pairs in ``text``.

        Zero pairs is a legal result (an empty annotation); a response with
        neither pairs nor a NONE marker is retried once, then raises
        ExtractionError carrying the raw response.
        """
        if not text.strip():
            raise ValueError("cannot extract entities from empty text")
        prompt = prompts.fill(self._template, text=text)
        request = ChatRequest(model=self._model, prompt=prompt, temperature=self._temperature)
        raw = ""
        for _ in range(2):
            raw = self._provider.complete(request)
            parsed = parse_pair_lines(raw)
            if parsed is not None:
                return EntityAnnotation.from_raw(
                    (subject for subject, _ in parsed), (obj for _, obj in parsed)
                )
        raise ExtractionError(f"unparseable extraction response for {text!r}: {raw!r}")

    def entities_of_claim(self, claim: str) -> ClaimEntities:
        """Union of all extracted pairs' subjects and objects for a claim."""
        annotation = self.extract_pairs(claim)
        return ClaimEntities(annotation.subjects, annotation.objects)
