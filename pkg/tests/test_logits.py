"""Unit tests for the shared logit/probability numerics."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from pad.logits import (argmax_index, check_logits, check_probs, margin,
                        normalized_entropy, softmax)

finite_logits = st.lists(
    st.floats(min_value=-100.0, max_value=100.0, allow_nan=False),
    min_size=2, max_size=32,
).map(lambda xs: np.array(xs, dtype=np.float64))


class TestSoftmax:
    def test_hand_normalized_exponentials(self):
        # softmax(ln k) is proportional to k; with k = 1..4 the normalizer
        # is 10, so the probabilities are exactly 0.1, 0.2, 0.3, 0.4.
        logits = np.log(np.array([1.0, 2.0, 3.0, 4.0]))
        np.testing.assert_allclose(softmax(logits), [0.1, 0.2, 0.3, 0.4],
                                   rtol=0, atol=1e-12)

    def test_symmetry(self):
        np.testing.assert_allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5],
                                   rtol=0, atol=0)

    def test_large_logits_no_overflow(self):
        probs = softmax(np.array([1000.0, 0.0]))
        assert np.all(np.isfinite(probs))
        np.testing.assert_allclose(probs, [1.0, 0.0], rtol=0, atol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            softmax(np.array([1.0, np.nan]))
        with pytest.raises(ValueError):
            softmax(np.array([1.0, np.inf]))

    def test_rejects_empty_and_wrong_shape(self):
        with pytest.raises(ValueError):
            softmax(np.array([]))
        with pytest.raises(ValueError):
            softmax(np.ones((2, 2)))

    @given(finite_logits)
    def test_sums_to_one(self, logits):
        probs = softmax(logits)
        assert abs(probs.sum() - 1.0) <= 1e-9
        assert np.all(probs >= 0.0)

    @given(finite_logits, st.floats(min_value=-100.0, max_value=100.0))
    def test_shift_invariance(self, logits, shift):
        np.testing.assert_allclose(softmax(logits + shift), softmax(logits),
                                   rtol=0, atol=1e-9)

    @given(finite_logits)
    def test_argmax_attains_max_probability(self, logits):
        # Rounded exp can collapse logits that differ by less than one ulp
        # of the exponentials into exact ties, so the argmax index itself is
        # not preserved in general. Monotonicity still guarantees the
        # original argmax lands on a maximal probability.
        probs = softmax(logits)
        assert probs[argmax_index(logits)] == probs.max()

    @given(finite_logits)
    def test_argmax_preserved_with_separation(self, logits):
        top = argmax_index(logits)
        rest = np.delete(logits, top)
        assume(logits[top] - rest.max() > 1e-6)
        assert argmax_index(softmax(logits)) == top


class TestMargin:
    def test_simple(self):
        assert margin(np.array([3.0, 1.0, 0.5])) == 2.0

    def test_tied_maxima(self):
        assert margin(np.array([7.0, 7.0, -1.0])) == 0.0

    def test_two_entries(self):
        assert margin(np.array([-1.0, -3.5])) == 2.5

    def test_rejects_single_entry(self):
        with pytest.raises(ValueError):
            margin(np.array([4.0]))

    @given(finite_logits)
    def test_non_negative(self, logits):
        assert margin(logits) >= 0.0

    @given(finite_logits, st.floats(min_value=-64.0, max_value=64.0))
    def test_shift_invariance(self, logits, shift):
        # Exact equality is impossible in floating point; the spread of the
        # top two entries survives a bounded shift to within rounding.
        assert abs(margin(logits + shift) - margin(logits)) <= 1e-9

    @given(finite_logits)
    def test_matches_sorted_top_two(self, logits):
        top = np.sort(logits)[-2:]
        assert margin(logits) == pytest.approx(top[1] - top[0], abs=0, rel=0)


class TestNormalizedEntropy:
    def test_uniform_is_one(self):
        probs = np.full(50, 1.0 / 50)
        assert normalized_entropy(probs) == pytest.approx(1.0, abs=1e-12)

    def test_one_hot_is_zero(self):
        probs = np.array([0.0, 1.0, 0.0])
        assert normalized_entropy(probs) == 0.0

    def test_half_half_over_four(self):
        # H = ln 2, normalizer ln 4, ratio exactly one half.
        probs = np.array([0.5, 0.5, 0.0, 0.0])
        assert normalized_entropy(probs) == pytest.approx(0.5, abs=1e-12)

    def test_rejects_short_vector(self):
        with pytest.raises(ValueError):
            normalized_entropy(np.array([1.0]))

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2,
                    max_size=16).filter(lambda xs: sum(xs) > 1e-6))
    def test_range_and_permutation_invariance(self, weights):
        probs = np.array(weights) / sum(weights)
        h = normalized_entropy(probs)
        assert 0.0 <= h <= 1.0 + 1e-12
        assert normalized_entropy(probs[::-1].copy()) == pytest.approx(h, abs=1e-12)

    @given(st.integers(min_value=2, max_value=32))
    def test_maximized_only_at_uniform(self, size):
        uniform = np.full(size, 1.0 / size)
        h_uniform = normalized_entropy(uniform)
        tilted = uniform.copy()
        tilted[0] += 0.5 * uniform[0]
        tilted[1] -= 0.5 * uniform[0]
        assert normalized_entropy(tilted) < h_uniform


class TestArgmax:
    def test_tie_breaks_to_lowest_index(self):
        assert argmax_index(np.array([1.0, 5.0, 5.0])) == 1

    def test_simple(self):
        assert argmax_index(np.array([-2.0, -7.0])) == 0
        assert argmax_index(np.array([0.0, 0.1, 0.05])) == 1

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            argmax_index(np.array([]))


class TestValidation:
    def test_check_logits_casts_to_float64(self):
        out = check_logits(np.array([1, 2], dtype=np.int32))
        assert out.dtype == np.float64

    def test_check_probs_rejects_negative(self):
        with pytest.raises(ValueError):
            check_probs(np.array([-0.1, 1.1]))

    def test_check_probs_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            check_probs(np.array([0.5, 0.6]))

    def test_check_probs_accepts_tolerant_sum(self):
        probs = np.array([0.5, 0.5 + 5e-10])
        check_probs(probs)
