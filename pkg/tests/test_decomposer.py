from __future__ import annotations

import json

import pytest

from factlens.core import ClaimRecord
from factlens.decomposer import (
    Decomposer,
    DecompositionError,
    DemonstrationSet,
    build_decomposition_prompt,
    parse_subclaim_list,
    sample_demonstrations,
)
from factlens.providers import MockChatProvider

AEGLIDAE = "Fresh water crustaceans Aeglidae are classified as Malocostraca and Decapoda."
AEGLIDAE_SUBS = [
    "Fresh water crustaceans Aeglidae are classified as Malocostraca",
    "Fresh water crustaceans Aeglidae are classified as Decapoda",
]


@pytest.fixture(scope="module")
def demos() -> DemonstrationSet:
    return DemonstrationSet.load()


class TestDemonstrationSet:
    def test_bundled_set_has_exactly_four(self, demos):
        assert len(demos.demos) == 4
        assert all(subs for _, subs in demos.demos)

    def test_wrong_count_rejected(self, demos):
        with pytest.raises(ValueError, match="exactly 4"):
            DemonstrationSet(demos.demos[:3])

    def test_sampling_is_three_distinct_of_four(self, demos):
        for seed in range(50):
            picked = sample_demonstrations(demos, seed)
            assert len(picked) == 3
            assert len({claim for claim, _ in picked}) == 3
            assert all(demo in demos.demos for demo in picked)

    def test_sampling_varies_with_seed(self, demos):
        orders = {tuple(claim for claim, _ in sample_demonstrations(demos, s)) for s in range(30)}
        assert len(orders) > 1

    def test_bundle_overridable_via_prompts_dir(self, tmp_path):
        replacement = [
            {"claim": f"Demo claim {i}.", "sub_claims": [f"Demo sub-claim {i}."]}
            for i in range(4)
        ]
        (tmp_path / "demonstrations.json").write_text(json.dumps(replacement), "utf-8")
        demos = DemonstrationSet.load(tmp_path)
        assert demos.demos[0] == ("Demo claim 0.", ("Demo sub-claim 0.",))


class TestBuildDecompositionPrompt:
    def test_deterministic_for_same_seed(self, demos):
        first = build_decomposition_prompt("Some claim.", demos, 17)
        second = build_decomposition_prompt("Some claim.", demos, 17)
        assert first == second

    def test_seeds_only_change_the_demonstration_block(self, demos):
        prompts = [build_decomposition_prompt("Some claim.", demos, seed) for seed in (1, 2, 99)]

        def outside_demos(prompt: str) -> tuple[str, str]:
            head, rest = prompt.split("For example:\n", 1)
            _, tail = rest.split("\n\nNote how each sub claim", 1)
            return head, tail

        assert len({outside_demos(p) for p in prompts}) == 1

    def test_contains_unit_claim_instruction(self, demos):
        prompt = build_decomposition_prompt("Some claim.", demos, 17)
        assert "If the original claim itself is a unit claim, do not break it down." in prompt
        assert "Claim: Some claim.\nSub_Claims:" in prompt

    def test_contains_three_demonstrations(self, demos):
        prompt = build_decomposition_prompt("Some claim.", demos, 17)
        # 3 demonstration claims plus the final claim line.
        assert prompt.count("Claim: ") == 4
        assert prompt.count("Sub_Claims: [") == 3


class TestParseSubclaimList:
    def test_bracketed_list(self):
        assert parse_subclaim_list("['a', 'b']") == ["a", "b"]

    def test_numbered_list(self):
        assert parse_subclaim_list("1. a\n2. b") == ["a", "b"]

    def test_dash_bullets_with_preamble(self):
        raw = "Here are the sub-claims:\n- first one\n- second one"
        assert parse_subclaim_list(raw) == ["first one", "second one"]

    def test_plain_lines(self):
        assert parse_subclaim_list("first one\nsecond one") == ["first one", "second one"]

    def test_label_prefix_stripped(self):
        assert parse_subclaim_list("Sub_Claims: ['a', 'b']") == ["a", "b"]

    def test_empty_rejected(self):
        with pytest.raises(DecompositionError):
            parse_subclaim_list("")

    def test_single_prose_line_rejected(self):
        with pytest.raises(DecompositionError):
            parse_subclaim_list("I cannot break this claim down.")


class TestDecompose:
    def record(self, claim: str) -> ClaimRecord:
        return ClaimRecord(id="t1", claim=claim, evidence="e", gold_label=False)

    def provider_answering(self, response: str) -> MockChatProvider:
        provider = MockChatProvider()
        provider.register_route("Sub_Claims: < your output in form of a list >", response)
        return provider

    def test_two_way_split(self, demos):
        provider = self.provider_answering(str(AEGLIDAE_SUBS))
        decomposer = Decomposer(provider, model="decomp-model", demos=demos)
        result = decomposer.decompose(self.record(AEGLIDAE), seed=17)
        assert list(result.sub_claims) == AEGLIDAE_SUBS
        assert result.generator == "decomp-model"
        assert result.seed == 17

    def test_unit_claim_passthrough(self, demos):
        claim = "Mount Everest is the tallest mountain above sea level."
        provider = self.provider_answering(f"['{claim}']")
        decomposer = Decomposer(provider, demos=demos)
        result = decomposer.decompose(self.record(claim), seed=3)
        assert list(result.sub_claims) == [claim]

    def test_prose_fails_after_retry(self, demos):
        provider = self.provider_answering("I cannot decompose that.")
        decomposer = Decomposer(provider, demos=demos)
        with pytest.raises(DecompositionError):
            decomposer.decompose(self.record(AEGLIDAE), seed=17)
        assert provider.call_count == 2

    def test_identical_inputs_identical_outputs(self, demos):
        provider = self.provider_answering(str(AEGLIDAE_SUBS))
        decomposer = Decomposer(provider, demos=demos)
        first = decomposer.decompose(self.record(AEGLIDAE), seed=17)
        second = decomposer.decompose(self.record(AEGLIDAE), seed=17)
        assert first == second
