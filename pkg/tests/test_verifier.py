from __future__ import annotations

import itertools
import random

import pytest

from factlens.core import ClaimRecord, Decomposition
from factlens.providers import MockChatProvider
from factlens.verifier import (
    VerificationError,
    Verifier,
    aggregate_labels,
    build_verification_prompt,
)

EVIDENCE = (
    "Aeglidae is a family of freshwater crustaceans of the infraorder Anomura. The family "
    "is classified under Malocostraca, but it is not classified as Decapoda."
)
CLAIM = ClaimRecord(
    id="c01",
    claim="Fresh water crustaceans Aeglidae are classified as Malocostraca and Decapoda.",
    evidence=EVIDENCE,
    gold_label=False,
)
SUB_TRUE = "Fresh water crustaceans Aeglidae are classified as Malocostraca"
SUB_FALSE = "Fresh water crustaceans Aeglidae are classified as Decapoda"
DECOMP = Decomposition(claim_id="c01", sub_claims=(SUB_TRUE, SUB_FALSE), generator="m", seed=0)


def aeglidae_verifier() -> Verifier:
    provider = MockChatProvider()
    provider.register(build_verification_prompt(SUB_TRUE, EVIDENCE), "true")
    provider.register(build_verification_prompt(SUB_FALSE, EVIDENCE), "false")
    provider.register(build_verification_prompt(CLAIM.claim, EVIDENCE), "true")
    return Verifier(provider, model="verify-model")


class TestAggregateLabels:
    def test_any_false_flips_the_aggregate(self):
        assert aggregate_labels([True, False]) is False

    def test_all_true_stays_true(self):
        assert aggregate_labels([True, True, True]) is True

    def test_exhaustive_truth_table_up_to_length_4(self):
        for n in range(1, 5):
            for labels in itertools.product([True, False], repeat=n):
                assert aggregate_labels(labels) == (False not in labels)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty label list"):
            aggregate_labels([])

    def test_permutation_invariant_and_monotone(self):
        rng = random.Random(13)
        for _ in range(100):
            labels = [rng.random() < 0.5 for _ in range(rng.randint(1, 6))]
            shuffled = labels[:]
            rng.shuffle(shuffled)
            assert aggregate_labels(labels) == aggregate_labels(shuffled)
            # Flipping any true to false never flips the aggregate to true.
            if any(labels):
                flipped = labels[:]
                flipped[flipped.index(True)] = False
                assert aggregate_labels(flipped) is False


class TestVerifySubclaim:
    def test_supported_sub_claim(self):
        assert aeglidae_verifier().verify_subclaim(SUB_TRUE, EVIDENCE) is True

    def test_refuted_sub_claim(self):
        assert aeglidae_verifier().verify_subclaim(SUB_FALSE, EVIDENCE) is False

    def test_case_insensitive_first_occurrence(self):
        provider = MockChatProvider()
        provider.register_route("Claim to verify: x", "It is TRUE that this holds, not false.")
        provider.register_route("Claim to verify: y", "False. Although some find it true.")
        verifier = Verifier(provider)
        assert verifier.verify_subclaim("x", "some evidence") is True
        assert verifier.verify_subclaim("y", "some evidence") is False

    def test_unparseable_verdict_errors_after_retry(self):
        provider = MockChatProvider()
        provider.register_route("Claim to verify:", "maybe")
        verifier = Verifier(provider)
        with pytest.raises(VerificationError, match="no true/false verdict"):
            verifier.verify_subclaim("x", "some evidence")
        assert provider.call_count == 2

    def test_empty_evidence_rejected(self):
        with pytest.raises(ValueError, match="evidence"):
            aeglidae_verifier().verify_subclaim(SUB_TRUE, "   ")


class TestVerifyFineGrained:
    def test_fixture_replay_labels_and_aggregate(self):
        outcome = aeglidae_verifier().verify_fine_grained(CLAIM, DECOMP)
        assert outcome.subclaim_labels == (True, False)
        assert outcome.aggregated_label is False
        assert outcome.aggregated_label == CLAIM.gold_label
        assert outcome.n_subclaims == 2
        assert len(outcome.rationales) == 2

    def test_singleton_aggregate_is_the_label(self):
        decomp = Decomposition(claim_id="c01", sub_claims=(SUB_TRUE,), generator="m", seed=0)
        outcome = aeglidae_verifier().verify_fine_grained(CLAIM, decomp)
        assert outcome.aggregated_label is True

    def test_aggregate_is_order_invariant(self):
        reordered = Decomposition(
            claim_id="c01", sub_claims=(SUB_FALSE, SUB_TRUE), generator="m", seed=0
        )
        assert (
            aeglidae_verifier().verify_fine_grained(CLAIM, reordered).aggregated_label
            is aeglidae_verifier().verify_fine_grained(CLAIM, DECOMP).aggregated_label
        )

    def test_deterministic_under_mock(self):
        first = aeglidae_verifier().verify_fine_grained(CLAIM, DECOMP)
        second = aeglidae_verifier().verify_fine_grained(CLAIM, DECOMP)
        assert first == second


class TestVerifyHolistic:
    def test_atomic_claim_matches_identity_decomposition(self):
        claim = ClaimRecord(id="a1", claim="The sky is blue.", evidence="The sky is blue.", gold_label=True)
        provider = MockChatProvider()
        provider.register(build_verification_prompt(claim.claim, claim.evidence), "true")
        verifier = Verifier(provider)
        identity = Decomposition(claim_id="a1", sub_claims=(claim.claim,), generator="m", seed=0)
        assert verifier.verify_holistic(claim) == verifier.verify_fine_grained(claim, identity).aggregated_label

    def test_holistic_can_miss_what_fine_grained_catches(self):
        outcome = aeglidae_verifier().verify_fine_grained(CLAIM, DECOMP)
        holistic = aeglidae_verifier().verify_holistic(CLAIM)
        assert holistic is True
        assert outcome.aggregated_label is False

    def test_empty_evidence_rejected(self):
        claim = ClaimRecord(id="a1", claim="The sky is blue.", evidence="", gold_label=True)
        with pytest.raises(ValueError):
            aeglidae_verifier().verify_holistic(claim)
