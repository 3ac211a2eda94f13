import itertools

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from testable_learning.core import Hypothesis, LabeledSample, MultiIndex, Polynomial, SlackSchedule, index_set, monomial_features
from testable_learning.distributions import (
    Halfspace,
    LabeledSource,
    Parity,
    cube_points,
    draw_labeled,
    gaussian,
    hypercube,
    majority,
    parities,
    sample_histogram,
)
from testable_learning.duality import cube_domain, solve_dual
from testable_learning.errors import EmptySampleError, ProblemTooLargeError
from testable_learning.learner import (
    l1_regression,
    mean_absolute_loss,
    select_threshold,
    testable_learn,
    zero_one_loss,
)
from testable_learning.moments import SubexpScheduleParams, subexp_slack


def l1_vertex_oracle(phi, y):
    """Brute force: an L1 optimum interpolates n points with independent features."""
    m, n = phi.shape
    best = np.mean(np.abs(y))
    for rows in itertools.combinations(range(m), n):
        A = phi[list(rows)]
        if abs(np.linalg.det(A)) < 1e-10:
            continue
        beta = np.linalg.solve(A, y[list(rows)])
        best = min(best, np.mean(np.abs(phi @ beta - y)))
    return best


def random_instance(rng, m, d):
    X = rng.standard_normal((m, d))
    y = np.where(rng.random(m) < 0.5, 1, -1)
    return LabeledSample(X, y)


class TestL1Regression:
    def test_single_point(self):
        p = l1_regression(LabeledSample(np.zeros((1, 2)), [1]), 0)
        assert p.coefficient((0, 0)) == pytest.approx(1.0)

    def test_median_constant(self):
        s = LabeledSample(np.zeros((3, 1)), [-1, -1, 1])
        p = l1_regression(s, 0)
        assert p.coefficient((0,)) == pytest.approx(-1.0)
        assert mean_absolute_loss(p, s) == pytest.approx(2 / 3)

    def test_exact_linear_fit(self):
        s = LabeledSample(np.array([[-1.0], [1.0]]), [-1, 1])
        p = l1_regression(s, 1)
        assert mean_absolute_loss(p, s) == pytest.approx(0.0, abs=1e-9)
        assert p.coefficient((1,)) == pytest.approx(1.0)

    def test_cap(self):
        with pytest.raises(ProblemTooLargeError):
            l1_regression(LabeledSample(np.zeros((2, 10)), [1, -1]), 4, feature_cap=100)

    def test_empty(self):
        with pytest.raises(EmptySampleError):
            l1_regression(LabeledSample(np.zeros((0, 1)), np.zeros(0, dtype=int)), 1)

    def test_beats_zero_polynomial(self, rng):
        for _ in range(10):
            s = random_instance(rng, 40, 2)
            assert mean_absolute_loss(l1_regression(s, 2), s) <= 1.0 + 1e-9

    def test_vertex_oracle(self, rng):
        for _ in range(10):
            s = random_instance(rng, 12, 1)
            phi = monomial_features(s.points, index_set(2, 1))
            assert mean_absolute_loss(l1_regression(s, 2), s) == pytest.approx(l1_vertex_oracle(phi, s.labels * 1.0), abs=1e-7)

    def test_matches_generic_minimizer(self, rng):
        # independent convex solver on 20 random small instances
        for trial in range(20):
            d, k = [(1, 3), (2, 2), (3, 1), (1, 2)][trial % 4]
            m = int(rng.integers(8, 31))
            s = random_instance(rng, m, d)
            phi = monomial_features(s.points, index_set(k, d))
            beta = cp.Variable(phi.shape[1])
            prob = cp.Problem(cp.Minimize(cp.sum(cp.abs(phi @ beta - s.labels)) / m))
            prob.solve(solver=cp.CLARABEL)
            assert mean_absolute_loss(l1_regression(s, k), s) == pytest.approx(prob.value, abs=1e-6)

    def test_primal_and_dual_agree(self, rng):
        for _ in range(5):
            s = random_instance(rng, 200, 2)
            a = mean_absolute_loss(l1_regression(s, 3, formulation="primal"), s)
            b = mean_absolute_loss(l1_regression(s, 3, formulation="dual"), s)
            assert a == pytest.approx(b, abs=1e-7)

    def test_permutation_invariant(self, rng):
        s = random_instance(rng, 60, 2)
        perm = rng.permutation(60)
        t = LabeledSample(s.points[perm], s.labels[perm])
        assert mean_absolute_loss(l1_regression(s, 2), s) == pytest.approx(mean_absolute_loss(l1_regression(t, 2), t), abs=1e-9)

    def test_multilinear_on_cube(self):
        X = cube_points(3)
        s = LabeledSample(X, majority(3).evaluate(X))
        p = l1_regression(s, 3, multilinear=True)
        assert all(I.is_multilinear() for I in p.coefficients)
        assert mean_absolute_loss(p, s) == pytest.approx(0.0, abs=1e-9)


class TestSelectThreshold:
    def _poly(self, values):
        # a degree-1 polynomial in d=1 that reproduces the given values at x = values
        return Polynomial(1, 1, {MultiIndex((1,)): 1.0}), np.asarray(values, dtype=float)[:, None]

    def test_perfect_separation(self):
        p, X = self._poly([0.3, 0.7, -0.4, -0.9])
        s = LabeledSample(X, [1, 1, -1, -1])
        assert zero_one_loss(select_threshold(p, s), s) == 0.0

    def test_all_positive(self):
        p, X = self._poly([0.3, -2.0, 5.0])
        s = LabeledSample(X, [1, 1, 1])
        h = select_threshold(p, s)
        assert h.threshold == -np.inf and zero_one_loss(h, s) == 0.0

    def test_scan_example(self):
        p, X = self._poly([0.9, 0.1, -0.2])
        s = LabeledSample(X, [1, -1, 1])
        h = select_threshold(p, s)
        assert zero_one_loss(h, s) == pytest.approx(1 / 3)
        assert 0.1 < h.threshold < 0.9

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.floats(-3, 3), st.sampled_from([-1, 1])), min_size=1, max_size=40))
    def test_optimal_among_all_cuts(self, rows):
        vals = np.array([v for v, _ in rows])
        y = np.array([l for _, l in rows])
        p, X = self._poly(vals)
        s = LabeledSample(X, y)
        got = zero_one_loss(select_threshold(p, s), s)
        cuts = np.concatenate([vals, [np.inf, -np.inf]])
        brute = min(np.mean(np.where(vals >= c, 1, -1) != y) for c in cuts)
        assert got == pytest.approx(brute)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_kkms_inequality(self, seed):
        rng = np.random.default_rng(seed)
        m = 150
        s = random_instance(rng, m, 2)
        if rng.random() < 0.5:
            s = LabeledSample(s.points, np.where(s.points[:, 0] + 0.3 * rng.standard_normal(m) >= 0, 1, -1))
        p = l1_regression(s, 2)
        err = zero_one_loss(select_threshold(p, s), s)
        assert err <= 0.5 * mean_absolute_loss(p, s) + 1 / (2 * m) + 1e-9


class TestZeroOne:
    def test_teacher_and_negation(self):
        X = cube_points(3)
        y = majority(3).evaluate(X)
        s = LabeledSample(X, y)
        h = Hypothesis(Polynomial(1, 3, {MultiIndex((1, 0, 0)): 1, MultiIndex((0, 1, 0)): 1, MultiIndex((0, 0, 1)): 1}), 0.0)
        assert zero_one_loss(h, s) == 0.0
        assert zero_one_loss(h, LabeledSample(X, -y)) == 1.0

    def test_random_labels(self, rng):
        m = 10_000
        s = LabeledSample(rng.standard_normal((m, 2)), np.where(rng.random(m) < 0.5, 1, -1))
        assert abs(zero_one_loss(Halfspace(np.array([1.0, 0.0])), s) - 0.5) <= 0.015


class TestTestableLearn:
    def test_cube_majority(self):
        X = cube_points(3)
        y = majority(3).evaluate(X)
        s = LabeledSample(X, y)
        res = testable_learn(s, hypercube(3), 2, SlackSchedule.uniform(0.01, 2, 3, True))
        assert res.accepted and res.hypothesis is not None
        reference = parities(3) + [majority(3)]
        opt = min(np.mean(f.evaluate(X) != y) for f in reference)
        assert zero_one_loss(res.hypothesis, s) <= opt
        assert np.array_equal(res.hypothesis.predict(X), y)

    def test_point_mass_rejected(self):
        s = LabeledSample(np.ones((30, 3)), np.ones(30, dtype=int))
        res = testable_learn(s, hypercube(3), 2, SlackSchedule.uniform(0.5, 2, 3, True))
        assert not res.accepted and res.hypothesis is None

    def test_gaussian_halfspace_noise(self):
        target = gaussian(2)
        src = LabeledSource(target, Halfspace(np.array([0.8, -0.6]), 0.2), 0.1)
        slack = subexp_slack(SubexpScheduleParams(k=4, d=2))
        accepted, good = 0, 0
        for seed in range(5):
            res = testable_learn(draw_labeled(src, 20_000, seed), target, 4, slack)
            if res.accepted:
                accepted += 1
                test = draw_labeled(src, 100_000, seed, stream=20)
                good += zero_one_loss(res.hypothesis, test) <= 0.2
        assert accepted == 5 and good == 5

    @pytest.mark.parametrize("d,k,f", [(3, 2, majority(3)), (4, 2, majority(4)), (4, 2, Parity((0, 1), 4)),
                                       (2, 1, Halfspace(np.array([1.0, 1.0]), 1.0))])
    def test_soundness_with_sandwich_certificate(self, d, k, f):
        # error <= opt + 2 eps + margin whenever the tester accepts and the LP certifies eps-sandwiching
        noise, delta, m = 0.1, 0.05, 8000
        dom = cube_domain(d)
        sigma = dom.moments(k, multilinear=True)
        slack = SlackSchedule.uniform(delta, k, d, multilinear=True)
        up = solve_dual(f, dom, sigma, slack, "upper")
        lo = solve_dual(f, dom, sigma, slack, "lower")
        base = dom.expectation(f.evaluate(dom.points))
        eps = max(up.bound - base, base - lo.bound)
        src = LabeledSource(hypercube(d), f, noise)
        for seed in range(3):
            s = draw_labeled(src, m, seed)
            res = testable_learn(s, hypercube(d), k, slack)
            assert res.accepted
            disagree = np.mean(res.hypothesis.predict(dom.points) != f.evaluate(dom.points))
            true_err = noise + (1 - 2 * noise) * disagree
            assert true_err <= noise + 2 * eps + 3 / np.sqrt(m)
