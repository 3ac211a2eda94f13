import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from testable_learning.core import (
    DiscreteDistribution,
    Hypothesis,
    LabeledSample,
    MomentVector,
    MultiIndex,
    Polynomial,
    SlackSchedule,
    TesterReport,
    UnlabeledSample,
    Violation,
    index_set,
    monomial_features,
    polynomial_eval,
    weighted_l1,
)
from testable_learning.errors import DimensionError, NormalizationError


def poly(d, terms, k=None):
    coefs = {MultiIndex(I): c for I, c in terms.items()}
    return Polynomial(k if k is not None else max((sum(I) for I in terms), default=0), d, coefs)


class TestMultiIndex:
    def test_degree_and_equality(self):
        I = MultiIndex((2, 0, 1))
        assert I.degree() == 3
        assert I == MultiIndex([2, 0, 1])
        assert I != MultiIndex((1, 0, 2))

    def test_parse_roundtrip(self):
        assert MultiIndex.parse("2,0,1") == MultiIndex((2, 0, 1))
        assert MultiIndex((2, 0, 1)).key() == "2,0,1"

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            MultiIndex((1, -1))

    def test_reduced_and_multilinear(self):
        assert MultiIndex((3, 2, 1)).reduced() == MultiIndex((1, 0, 1))
        assert MultiIndex((1, 0, 1)).is_multilinear()
        assert not MultiIndex((2, 0)).is_multilinear()


class TestIndexSet:
    def test_graded_lex_order(self):
        got = [tuple(I) for I in index_set(2, 2)]
        assert got == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]

    @pytest.mark.parametrize("k,d", [(0, 5), (3, 4), (6, 8), (4, 1)])
    def test_size(self, k, d):
        assert len(index_set(k, d)) == math.comb(d + k, k)

    def test_multilinear_size(self):
        assert len(index_set(2, 8, multilinear=True)) == 1 + 8 + 28


class TestPolynomialEval:
    def test_direct_substitution(self):
        p = poly(2, {(0, 0): 1.0, (1, 1): 2.0})
        assert polynomial_eval(p, [1, 1]) == 3.0

    def test_zero_polynomial(self):
        assert polynomial_eval(Polynomial.zero(3, 2), [0.3, -7.0]) == 0.0

    def test_hand_value(self):
        p = poly(2, {(2, 0): 1.0, (0, 1): -1.0})
        assert polynomial_eval(p, [2, 3]) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            polynomial_eval(poly(2, {(1, 0): 1.0}), [1.0, 2.0, 3.0])

    def test_evaluate_many_matches_scalar(self, rng):
        p = poly(3, {(0, 0, 0): 0.5, (1, 2, 0): -1.5, (0, 0, 3): 2.0, (1, 1, 1): 0.25})
        X = rng.standard_normal((20, 3))
        assert np.allclose(p.evaluate_many(X), [p(x) for x in X], rtol=1e-12, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=6, max_size=6),
           st.lists(st.floats(-3, 3), min_size=6, max_size=6),
           st.lists(st.floats(-2, 2), min_size=2, max_size=2))
    def test_linear_in_coefficients(self, a, b, x):
        idx = index_set(2, 2)
        p, q = Polynomial.from_array(idx, a, k=2), Polynomial.from_array(idx, b, k=2)
        lhs = (p + q)(x)
        rhs = p(x) + q(x)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(p(x)) + abs(q(x)))


class TestWeightedL1:
    def test_constant_contributes_nothing(self):
        s = SlackSchedule.uniform(0.3, 2, 2)
        assert weighted_l1(poly(2, {(0, 0): 5.0}, k=2), s) == 0.0

    def test_uniform(self):
        s = SlackSchedule.uniform(0.1, 1, 2)
        assert weighted_l1(poly(2, {(1, 0): 1.0, (0, 1): -1.0}), s) == pytest.approx(0.2)

    def test_per_index(self):
        entries = {I: 1.0 for I in index_set(2, 2)}
        entries[MultiIndex((0, 0))] = 0.0
        entries[MultiIndex((1, 0))] = 0.5
        entries[MultiIndex((1, 1))] = 0.25
        s = SlackSchedule(2, 2, entries)
        p = poly(2, {(1, 0): 2.0, (1, 1): 3.0})
        assert weighted_l1(p, s) == pytest.approx(1.75)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            weighted_l1(poly(3, {(1, 0, 0): 1.0}), SlackSchedule.uniform(0.1, 1, 2))

    def test_l1_norm_excludes_constant(self):
        assert poly(2, {(0, 0): 9.0, (1, 0): -2.0, (0, 2): 0.5}).l1_norm() == 2.5

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=6, max_size=6),
           st.lists(st.floats(1e-3, 1.0), min_size=5, max_size=5),
           st.lists(st.floats(0.0, 1.0), min_size=5, max_size=5))
    def test_monotone_in_slack(self, coefs, small, extra):
        idx = index_set(2, 2)
        lo = SlackSchedule(2, 2, dict(zip(idx, [0.0] + small)))
        hi = SlackSchedule(2, 2, dict(zip(idx, [0.0] + [a + b for a, b in zip(small, extra)])))
        p = Polynomial.from_array(idx, coefs, k=2)
        assert weighted_l1(p, lo) <= weighted_l1(p, hi) + 1e-12
        assert weighted_l1(p, lo) >= 0
        assert (weighted_l1(p, lo) == 0) == (p.l1_norm() == 0)


class TestSchedulesAndVectors:
    def test_zero_index_must_be_zero(self):
        entries = {I: 0.1 for I in index_set(1, 2)}
        with pytest.raises(ValueError):
            SlackSchedule(1, 2, entries)

    def test_nonzero_must_be_positive(self):
        entries = {I: 0.0 for I in index_set(1, 2)}
        with pytest.raises(ValueError):
            SlackSchedule(1, 2, entries)

    def test_moment_vector_needs_full_index_set(self):
        with pytest.raises((ValueError, DimensionError)):
            MomentVector(2, 2, {MultiIndex((0, 0)): 1.0})

    def test_distribution_moments_have_unit_zero_entry(self, rng):
        w = rng.dirichlet(np.ones(7))
        dist = DiscreteDistribution(rng.standard_normal((7, 3)), w / w.sum())
        assert dist.moments(3)[(0, 0, 0)] == 1.0


class TestSamples:
    def test_labels_in_pm1(self):
        with pytest.raises(ValueError):
            LabeledSample(np.zeros((2, 1)), [1, 0])

    def test_label_length(self):
        with pytest.raises(DimensionError):
            LabeledSample(np.zeros((3, 1)), [1, -1])

    def test_counts_weights(self):
        s = UnlabeledSample(np.array([[0.0], [1.0]]), [3, 1])
        assert s.size == 4
        assert np.allclose(s.weights(), [0.75, 0.25])

    def test_distribution_normalization(self):
        with pytest.raises(NormalizationError):
            DiscreteDistribution(np.zeros((2, 1)), [0.5, 0.6])


class TestHypothesisAndReport:
    def test_predict_threshold_inclusive(self):
        h = Hypothesis(poly(1, {(1,): 1.0}), 0.5)
        assert h.predict(np.array([[0.5], [0.49], [2.0]])).tolist() == [1, -1, 1]

    def test_infinite_thresholds(self):
        p = poly(1, {(1,): 1.0})
        X = np.array([[-1e300], [1e300]])
        assert Hypothesis(p, -np.inf).predict(X).tolist() == [1, 1]
        assert Hypothesis(p, np.inf).predict(X).tolist() == [-1, -1]

    def test_report_consistency(self):
        v = Violation(MultiIndex((1,)), 0.5, 0.0, 0.1)
        with pytest.raises(ValueError):
            TesterReport(True, (v,), 5.0)
        with pytest.raises(ValueError):
            TesterReport(False, (), 0.2)


def test_monomial_features_columns(rng):
    X = rng.standard_normal((5, 2))
    F = monomial_features(X, index_set(2, 2))
    assert np.allclose(F[:, 0], 1)
    assert np.allclose(F[:, 4], X[:, 0] * X[:, 1])
    assert np.allclose(F[:, 5], X[:, 0] ** 2)
