"""Evidence-based true/false verification of sub-claims and whole claims.

Evidence is passed verbatim (no retrieval or chunking); the verifier model
is asked for a one-word verdict before any explanation, and the fine-grained
labels of one claim aggregate by conjunction.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable

from . import prompts
from .core import ClaimRecord, Decomposition, FactLensError, VerificationOutcome
from .providers import ChatRequest

_VERDICT_RE = re.compile(r"\b(true|false)\b", re.IGNORECASE)


class VerificationError(FactLensError):
    """No true/false verdict could be parsed for an instance."""


def aggregate_labels(labels: Iterable[bool]) -> bool:
    """Conjunction of sub-claim labels: false if any label is false."""
    values = list(labels)
    if not values:
        raise ValueError("empty label list")
    return all(values)


def build_verification_prompt(
    claim: str, evidence: str, prompts_dir: str | Path | None = None
) -> str:
    template = prompts.load_text(prompts.VERIFICATION_TEMPLATE, prompts_dir)
    return prompts.fill(template, evidence=evidence, claim=claim)


class Verifier:
    """Judges claims against provided evidence with a verifier model."""

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
        self._template = prompts.load_text(prompts.VERIFICATION_TEMPLATE, prompts_dir)

    def verify_subclaim(self, sub_claim: str, evidence: str) -> bool:
        """True/false verdict for one sub-claim against the evidence."""
        label, _ = self._verify(sub_claim, evidence)
        return label

    def verify_fine_grained(self, claim: ClaimRecord, decomposition: Decomposition) -> VerificationOutcome:
        """Verify every sub-claim and aggregate the labels by conjunction."""
        labels: list[bool] = []
        rationales: list[str] = []
        for sub in decomposition.sub_claims:
            label, raw = self._verify(sub, claim.evidence)
            labels.append(label)
            rationales.append(raw)
        return VerificationOutcome(
            claim_id=claim.id,
            subclaim_labels=tuple(labels),
            aggregated_label=aggregate_labels(labels),
            rationales=tuple(rationales),
        )

    def verify_holistic(self, claim: ClaimRecord) -> bool:
        """Single verdict for the whole claim, without decomposition."""
        label, _ = self._verify(claim.claim, claim.evidence)
        return label

    def _verify(self, text: str, evidence: str) -> tuple[bool, str]:
        if not evidence.strip():
            raise ValueError("evidence must be non-empty")
        prompt = prompts.fill(self._template, evidence=evidence, claim=text)
        request = ChatRequest(model=self._model, prompt=prompt, temperature=self._temperature)
        raw = ""
        for _ in range(2):
            raw = self._provider.complete(request)
            match = _VERDICT_RE.search(raw)
            if match is not None:
                return match.group(1).lower() == "true", raw
        raise VerificationError(f"no true/false verdict for {text!r}: {raw[:200]!r}")
