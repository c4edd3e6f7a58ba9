import math

import numpy as np
import pytest

from diffrank import (
    DataError,
    DegenerateInput,
    EmptySequence,
    MultimodalERanks,
    NonFiniteInput,
    SentenceEntropyRecord,
    SentenceSetMismatch,
    SequenceLogProbs,
    cross_entropy_loss,
    dataset_diff_erank_a,
    dataset_diff_erank_b,
    diff_erank_sentence,
    image_reduction_ratio,
    image_text_alignment,
    reduced_loss,
    sentence_record,
    summarize,
)

from _oracles import dataset_diff_oracle


def _record(sid, entropy, tokens=10, dropped=0):
    return SentenceEntropyRecord(sid, tokens, entropy, math.exp(entropy), dropped)


def _isotropic_reps(d):
    # Rows +/- e_i: mean zero, unit directions along every axis, so the
    # covariance is exactly I/d and the effective rank exactly d.
    return np.concatenate([np.eye(d), -np.eye(d)], axis=0)


def _collinear_reps(d, k=4):
    v = np.zeros(d)
    v[0] = 1.0
    return np.outer(np.arange(1.0, k + 1.0), v)


class TestDiffERankSentence:
    def test_identical_sets_zero(self, rng):
        X = rng.normal(size=(8, 5))
        assert diff_erank_sentence(X, X) == 0.0

    def test_constructed_extremes(self):
        d = 6
        diff = diff_erank_sentence(_isotropic_reps(d), _collinear_reps(d))
        assert diff == pytest.approx(d - 1, abs=0.05)

    def test_swapped_arguments_negate(self, rng):
        A = rng.normal(size=(7, 4))
        B = rng.normal(size=(9, 4))
        assert diff_erank_sentence(A, B) == -diff_erank_sentence(B, A)

    def test_degenerate_untrained_is_tagged(self, rng):
        constant = np.ones((5, 4))
        healthy = rng.normal(size=(5, 4))
        with pytest.raises(DegenerateInput, match="untrained"):
            diff_erank_sentence(constant, healthy)
        with pytest.raises(DegenerateInput, match="trained"):
            diff_erank_sentence(healthy, constant)


class TestDatasetDiffERank:
    def test_single_sentence_reduces_to_sentence_diff(self, rng):
        A = rng.normal(size=(10, 6))
        B = rng.normal(size=(13, 6))
        s0 = summarize("m0", -1, [sentence_record("x", A)])
        s1 = summarize("m1", -1, [sentence_record("x", B)])
        expected = diff_erank_sentence(A, B)
        assert dataset_diff_erank_a(s0, s1) == pytest.approx(expected, abs=1e-10)
        assert dataset_diff_erank_b(s0, s1) == pytest.approx(expected, abs=1e-10)

    def test_hand_arithmetic(self):
        s0 = summarize("m0", -1, [_record("a", 0.0), _record("b", math.log(4))])
        s1 = summarize("m1", -1, [_record("a", 0.0), _record("b", 0.0)])
        assert dataset_diff_erank_a(s0, s1) == pytest.approx(1.0, abs=1e-12)
        assert dataset_diff_erank_b(s0, s1) == pytest.approx(1.5, abs=1e-12)

    def test_matches_flat_oracle_on_corpus(self):
        rng = np.random.default_rng(424242)
        reps0 = {f"s{i}": rng.normal(size=(int(rng.integers(5, 14)), 6)) for i in range(20)}
        reps1 = {sid: rng.normal(size=(int(rng.integers(5, 14)), 6)) for sid in reps0}
        ids = sorted(reps0)
        s0 = summarize("m0", -1, [sentence_record(sid, reps0[sid]) for sid in ids])
        s1 = summarize("m1", -1, [sentence_record(sid, reps1[sid]) for sid in ids])
        expected_a, expected_b = dataset_diff_oracle(reps0, reps1)
        assert dataset_diff_erank_a(s0, s1) == pytest.approx(expected_a, abs=1e-9)
        assert dataset_diff_erank_b(s0, s1) == pytest.approx(expected_b, abs=1e-9)

    def test_mismatched_ids_rejected(self):
        s0 = summarize("m0", -1, [_record("a", 0.1), _record("b", 0.2)])
        s1 = summarize("m1", -1, [_record("a", 0.1), _record("c", 0.2)])
        with pytest.raises(SentenceSetMismatch) as excinfo:
            dataset_diff_erank_a(s0, s1)
        assert excinfo.value.only_first == ["b"]
        assert excinfo.value.only_second == ["c"]

    def test_summarize_rejects_empty(self):
        with pytest.raises(DataError):
            summarize("m", -1, [])

    def test_record_invariant_enforced(self):
        with pytest.raises(DataError):
            SentenceEntropyRecord("bad", 5, 1.0, 99.0, 0)


class TestCrossEntropyLoss:
    def test_uniform_vocab_four(self):
        logprobs = np.full(3, -math.log(4))
        assert cross_entropy_loss(logprobs) == pytest.approx(math.log(4), abs=1e-12)

    def test_perfect_prediction(self):
        assert cross_entropy_loss(np.zeros(5)) == 0.0

    def test_accepts_record_type(self):
        seq = SequenceLogProbs("s0", np.array([-1.0, -2.0, -3.0]))
        assert cross_entropy_loss(seq) == pytest.approx(2.0, abs=1e-12)

    def test_reordering_invariant(self, rng):
        values = -rng.exponential(2.0, size=50)
        shuffled = values[rng.permutation(50)]
        assert cross_entropy_loss(shuffled) == pytest.approx(
            cross_entropy_loss(values), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptySequence):
            cross_entropy_loss(np.array([]))

    def test_positive_entries_rejected(self):
        with pytest.raises(DataError):
            cross_entropy_loss(np.array([-1.0, 0.5]))

    def test_nan_rejected(self):
        with pytest.raises(NonFiniteInput):
            cross_entropy_loss(np.array([-1.0, np.nan]))


class TestReducedLoss:
    def test_identity_zero(self):
        assert reduced_loss(10.0, 10.0) == 0.0

    def test_uniform_vs_perfect(self):
        assert reduced_loss(math.log(4), 0.0) == pytest.approx(1.386294, abs=1e-6)

    def test_negative_rejected(self):
        with pytest.raises(DataError):
            reduced_loss(-0.1, 1.0)
        with pytest.raises(DataError):
            reduced_loss(1.0, -0.1)


class TestImageReductionRatio:
    def test_reference_values(self):
        assert image_reduction_ratio(18.34, 11.28) == pytest.approx(0.3850, abs=5e-4)
        assert image_reduction_ratio(90.59, 55.70) == pytest.approx(0.3851, abs=5e-4)

    def test_no_reduction(self):
        assert image_reduction_ratio(7.25, 7.25) == 0.0

    def test_scale_invariant(self):
        assert image_reduction_ratio(3.0 * 18.34, 3.0 * 11.28) == pytest.approx(
            image_reduction_ratio(18.34, 11.28), abs=1e-12)

    def test_below_one_rejected(self):
        with pytest.raises(DataError):
            image_reduction_ratio(0.5, 1.0)


class TestImageTextAlignment:
    def test_reference_values(self):
        assert image_text_alignment(45.62, 74.21, 76.34) == pytest.approx(0.8566, abs=5e-4)
        assert image_text_alignment(58.50, 63.63, 108.53) == pytest.approx(0.7084, abs=5e-4)

    @pytest.mark.parametrize("x", [1.0, 3.7, 120.0])
    def test_equal_ranks_align_perfectly(self, x):
        assert image_text_alignment(x, x, x) == 1.0

    def test_permutation_invariant(self):
        base = image_text_alignment(45.62, 74.21, 76.34)
        assert image_text_alignment(76.34, 45.62, 74.21) == pytest.approx(base, abs=1e-15)
        assert image_text_alignment(74.21, 76.34, 45.62) == pytest.approx(base, abs=1e-15)

    def test_scale_invariant(self):
        base = image_text_alignment(45.62, 74.21, 76.34)
        scaled = image_text_alignment(2.5 * 45.62, 2.5 * 74.21, 2.5 * 76.34)
        assert scaled == pytest.approx(base, abs=1e-12)

    def test_range(self, rng):
        for _ in range(50):
            e = 1.0 + rng.exponential(30.0, size=3)
            value = image_text_alignment(*e)
            assert 1.0 / 3.0 < value <= 1.0

    def test_invalid_rank_rejected(self):
        with pytest.raises(DataError):
            image_text_alignment(0.9, 2.0, 3.0)


class TestMultimodalERanks:
    def test_properties_match_functions(self):
        ranks = MultimodalERanks(18.34, 11.28, 45.62, 74.21, 76.34)
        assert ranks.reduction_ratio == image_reduction_ratio(18.34, 11.28)
        assert ranks.alignment == image_text_alignment(45.62, 74.21, 76.34)

    def test_validation(self):
        with pytest.raises(DataError):
            MultimodalERanks(18.34, 0.28, 45.62, 74.21, 76.34)
        with pytest.raises(DataError):
            MultimodalERanks(18.34, 11.28, math.inf, 74.21, 76.34)
