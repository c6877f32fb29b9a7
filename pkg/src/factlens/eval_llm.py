"""LLM-as-judge scoring of the six sub-claim quality metrics.

The judge receives one metric instruction at a time: per-sub-claim metrics
(atomicity, sufficiency, fabrication, readability) see one sub-claim per
call, while coverage and redundancy see the whole decomposition.
"""

from __future__ import annotations

import re
from enum import Enum
from pathlib import Path
from typing import Sequence

from . import core, prompts
from .core import AtomicityLabel, Decomposition, FactLensError, Label, OrdinalScore
from .providers import ChatRequest, ProviderError


class JudgeParseError(FactLensError):
    """The judge response named no recognizable label."""


class EvaluationError(FactLensError):
    """A metric evaluation failed for a specific claim or sub-claim."""


class MetricKind(Enum):
    """The six quality metrics and their scoring scope."""

    ATOMICITY = core.ATOMICITY
    SUFFICIENCY = core.SUFFICIENCY
    FABRICATION = core.FABRICATION
    COVERAGE = core.COVERAGE
    REDUNDANCY = core.REDUNDANCY
    READABILITY = core.READABILITY

    @property
    def per_subclaim(self) -> bool:
        """Whether the metric scores each sub-claim (vs the whole set)."""
        return self.value in core.PER_SUBCLAIM_METRICS


_ORDINAL_RE = re.compile(r"\b(low|medium|high)\b", re.IGNORECASE)
# Longest label first: "non-atomic-1" contains "atomic".
_ATOMICITY_LABELS = ("non-atomic-2", "non-atomic-1", "atomic")


def build_metric_prompt(
    metric: MetricKind,
    claim: str,
    target: str | Sequence[str],
    prompts_dir: str | Path | None = None,
) -> str:
    """Fill the judge prompt for one metric; deterministic.

    Per-sub-claim metrics take a single sub-claim string; whole-set metrics
    take the full sub-claim list. A mismatched target shape is an error.
    """
    shell = prompts.load_text(prompts.METRIC_SHELL, prompts_dir)
    instruction = prompts.load_text(prompts.metric_instruction_file(metric.value), prompts_dir)
    return _fill_metric_shell(shell, instruction, metric, claim, target)


def _fill_metric_shell(
    shell: str,
    instruction: str,
    metric: MetricKind,
    claim: str,
    target: str | Sequence[str],
) -> str:
    if metric.per_subclaim:
        if not isinstance(target, str):
            raise ValueError(f"{metric.value} scores one sub-claim, not a list")
        target_line = f"Sub-Claim: {target}"
    else:
        if isinstance(target, str):
            raise ValueError(f"{metric.value} scores the whole sub-claim set, not one sub-claim")
        target_line = f"Sub-Claims: {prompts.render_list(target)}"
    return prompts.fill(shell, metric=instruction.strip(), claim=claim, target=target_line)


def parse_ordinal(text: str, metric: MetricKind) -> Label:
    """Extract the judge's label from free-form text.

    Atomicity uses longest-match-first over its three labels; the other
    metrics take the first low/medium/high occurrence, case-insensitively.
    """
    lowered = text.lower()
    if metric is MetricKind.ATOMICITY:
        for label in _ATOMICITY_LABELS:
            if label in lowered:
                return AtomicityLabel.from_text(label)
        raise JudgeParseError(f"no atomicity label in judge response: {text[:200]!r}")
    match = _ORDINAL_RE.search(text)
    if match is None:
        raise JudgeParseError(f"no low/medium/high label in judge response: {text[:200]!r}")
    return OrdinalScore.from_text(match.group(1))


class LlmJudge:
    """Scores decompositions with a judge model and the metric prompts.

    Stateless orchestration over the provider; a parse failure is retried
    once with the identical prompt before the instance fails.
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
        self._shell = prompts.load_text(prompts.METRIC_SHELL, prompts_dir)
        self._instructions = {
            kind: prompts.load_text(prompts.metric_instruction_file(kind.value), prompts_dir)
            for kind in MetricKind
        }

    def evaluate_metric(
        self, metric: MetricKind, claim: str, decomposition: Decomposition
    ) -> list[Label] | OrdinalScore:
        """Return n per-sub-claim scores, or one score for whole-set metrics."""
        if metric.per_subclaim:
            return [
                self._judge_once(metric, claim, sub, f"{decomposition.claim_id}[{i}]")
                for i, sub in enumerate(decomposition.sub_claims)
            ]
        score = self._judge_once(
            metric, claim, list(decomposition.sub_claims), decomposition.claim_id
        )
        assert isinstance(score, OrdinalScore)
        return score

    def _judge_once(
        self, metric: MetricKind, claim: str, target: str | Sequence[str], where: str
    ) -> Label:
        prompt = _fill_metric_shell(self._shell, self._instructions[metric], metric, claim, target)
        request = ChatRequest(model=self._model, prompt=prompt, temperature=self._temperature)
        last_error: JudgeParseError | None = None
        for _ in range(2):
            try:
                raw = self._provider.complete(request)
            except ProviderError as exc:
                raise EvaluationError(f"{metric.value} judgment failed for {where}: {exc}") from exc
            try:
                return parse_ordinal(raw, metric)
            except JudgeParseError as exc:
                last_error = exc
        raise EvaluationError(f"{metric.value} judgment failed for {where}: {last_error}")
