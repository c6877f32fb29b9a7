from __future__ import annotations

import pytest

from factlens.core import AtomicityLabel, Decomposition, OrdinalScore
from factlens.eval_llm import (
    EvaluationError,
    JudgeParseError,
    LlmJudge,
    MetricKind,
    build_metric_prompt,
    parse_ordinal,
)
from factlens.providers import ChatRequest, MockChatProvider, ProviderError


def decomposition(*subs: str) -> Decomposition:
    return Decomposition(claim_id="t1", sub_claims=subs, generator="m", seed=0)


class TestMetricKind:
    def test_scope_is_fixed_per_kind(self):
        per_subclaim = {k for k in MetricKind if k.per_subclaim}
        assert per_subclaim == {
            MetricKind.ATOMICITY,
            MetricKind.SUFFICIENCY,
            MetricKind.FABRICATION,
            MetricKind.READABILITY,
        }


class TestBuildMetricPrompt:
    def test_sufficiency_prompt_contains_instruction(self):
        prompt = build_metric_prompt(MetricKind.SUFFICIENCY, "the claim", "one sub-claim")
        assert (
            "sufficient to be fact-checked without the need of any additional contextual information"
            in prompt
        )
        assert "Claim: the claim" in prompt
        assert "Sub-Claim: one sub-claim" in prompt

    def test_coverage_prompt_contains_full_list(self):
        prompt = build_metric_prompt(MetricKind.COVERAGE, "the claim", ["sub a", "sub b"])
        assert "Sub-Claims: ['sub a', 'sub b']" in prompt

    def test_scope_mismatch_rejected(self):
        with pytest.raises(ValueError, match="whole sub-claim set"):
            build_metric_prompt(MetricKind.COVERAGE, "c", "single sub-claim")
        with pytest.raises(ValueError, match="one sub-claim"):
            build_metric_prompt(MetricKind.SUFFICIENCY, "c", ["a", "b"])

    def test_deterministic(self):
        args = (MetricKind.READABILITY, "claim", "sub")
        assert build_metric_prompt(*args) == build_metric_prompt(*args)


class TestParseOrdinal:
    def test_case_insensitive_match(self):
        score = parse_ordinal("The sub-claim has HIGH sufficiency.", MetricKind.SUFFICIENCY)
        assert score is OrdinalScore.HIGH

    def test_longest_atomicity_label_wins(self):
        assert parse_ordinal("non-atomic-1", MetricKind.ATOMICITY) is AtomicityLabel.NON_ATOMIC_1
        assert parse_ordinal("non-atomic-2", MetricKind.ATOMICITY) is AtomicityLabel.NON_ATOMIC_2
        assert parse_ordinal("clearly atomic", MetricKind.ATOMICITY) is AtomicityLabel.ATOMIC

    def test_first_occurrence_wins(self):
        assert parse_ordinal("medium, maybe high", MetricKind.COVERAGE) is OrdinalScore.MEDIUM

    def test_word_boundaries_respected(self):
        with pytest.raises(JudgeParseError):
            parse_ordinal("lower highest mediums", MetricKind.READABILITY)

    def test_no_label_is_parse_error(self):
        with pytest.raises(JudgeParseError):
            parse_ordinal("I cannot judge.", MetricKind.SUFFICIENCY)


class _FlakyProvider:
    """Returns scripted responses in order, regardless of prompt."""

    provider_id = "flaky"

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = 0

    def complete(self, request: ChatRequest) -> str:
        self.calls += 1
        response = self.responses.pop(0)
        if isinstance(response, Exception):
            raise response
        return response


class TestLlmJudge:
    def canned_judge(self, response: str = "high") -> tuple[LlmJudge, MockChatProvider]:
        provider = MockChatProvider()
        provider.register_route("Your job is to evaluate this sub-claim", response)
        return LlmJudge(provider, model="judge-model"), provider

    def test_per_subclaim_metric_issues_one_call_per_sub(self):
        judge, provider = self.canned_judge("high")
        scores = judge.evaluate_metric(
            MetricKind.READABILITY, "claim", decomposition("a", "b", "c")
        )
        assert scores == [OrdinalScore.HIGH] * 3
        assert provider.call_count == 3

    def test_whole_set_metric_issues_one_call(self):
        judge, provider = self.canned_judge("low")
        score = judge.evaluate_metric(MetricKind.REDUNDANCY, "claim", decomposition("a", "b", "c"))
        assert score is OrdinalScore.LOW
        assert provider.call_count == 1

    def test_full_evaluation_issues_4n_plus_2_calls(self):
        judge, provider = self.canned_judge("high")
        decomp = decomposition("a", "b", "c")
        for metric in MetricKind:
            if metric is MetricKind.ATOMICITY:
                continue
            judge.evaluate_metric(metric, "claim", decomp)
        atomicity_judge, atomicity_provider = self.canned_judge("atomic")
        atomicity_judge.evaluate_metric(MetricKind.ATOMICITY, "claim", decomp)
        total = provider.call_count + atomicity_provider.call_count
        assert total == 4 * decomp.n + 2

    def test_parse_failure_retries_once_with_identical_prompt(self):
        provider = _FlakyProvider(["garbled noise", "high"])
        judge = LlmJudge(provider, model="judge-model")
        score = judge.evaluate_metric(MetricKind.SUFFICIENCY, "claim", decomposition("a"))
        assert score == [OrdinalScore.HIGH]
        assert provider.calls == 2

    def test_persistent_parse_failure_names_the_metric_and_instance(self):
        provider = _FlakyProvider(["noise", "more noise"])
        judge = LlmJudge(provider, model="judge-model")
        with pytest.raises(EvaluationError, match=r"sufficiency judgment failed for t1\[0\]"):
            judge.evaluate_metric(MetricKind.SUFFICIENCY, "claim", decomposition("a"))

    def test_provider_error_is_wrapped_with_identifiers(self):
        provider = _FlakyProvider([ProviderError("boom")])
        judge = LlmJudge(provider, model="judge-model")
        with pytest.raises(EvaluationError, match="redundancy judgment failed for t1"):
            judge.evaluate_metric(MetricKind.REDUNDANCY, "claim", decomposition("a", "b"))
