import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from testable_learning.core import LabeledSample, MultiIndex, index_set, monomial_features
from testable_learning.distributions import (
    DistributionProfile,
    ExplicitSource,
    FunctionOfHalfspaces,
    Halfspace,
    LabeledSource,
    Parity,
    concept_opt,
    constant,
    constants,
    cube_points,
    draw_labeled,
    gaussian,
    gaussian_moment,
    hypercube,
    hypercube_moment,
    parities,
    parse_target,
    rng_for,
    sample,
    sgn,
    sphere,
)
from testable_learning.errors import EmptyClassError
from testable_learning.moments import empirical_moments


class TestMomentOracles:
    def test_gaussian_examples(self):
        assert gaussian_moment((1, 0)) == 0
        assert gaussian_moment((0, 0, 0)) == 1
        assert gaussian_moment((4, 2)) == 3
        assert gaussian_moment((6,)) == 15

    def test_gaussian_quadrature(self):
        # Gauss-Hermite (probabilists') quadrature is exact for these degrees
        x, w = np.polynomial.hermite_e.hermegauss(20)
        w = w / w.sum()
        for a, b in [(4, 2), (2, 2), (6, 0), (3, 1)]:
            quad = (w @ x**a) * (w @ x**b)
            assert quad == pytest.approx(gaussian_moment((a, b)), abs=1e-10)

    def test_hypercube_examples(self):
        assert hypercube_moment((1, 1, 0)) == 0
        assert hypercube_moment((2, 0)) == 1
        assert hypercube_moment((3, 2, 1)) == 0

    @pytest.mark.parametrize("d", [1, 3, 6, 10])
    def test_hypercube_exhaustive(self, d):
        pts = cube_points(d)
        idx = index_set(4, d)
        emp = monomial_features(pts, idx).mean(axis=0)
        assert np.array_equal(emp, [hypercube_moment(I) for I in idx])

    def test_gaussian_monte_carlo(self):
        # 10^7 draws, every |I| <= 6 in d = 4 within 5 standard errors
        n, d = 10**7, 4
        target = gaussian(d)
        emp = empirical_moments(sample(target, n, seed=2024), 6)
        for I, e in emp.entries.items():
            mean = gaussian_moment(I)
            var = gaussian_moment(tuple(2 * a for a in I)) - mean**2
            if var == 0:
                assert e == mean
                continue
            assert abs(e - mean) <= 5 * np.sqrt(var / n), I

    def test_zero_index_is_one(self):
        for t in (gaussian(3), hypercube(3), sphere(3)):
            assert t.moment(MultiIndex.zero(3)) == 1.0

    def test_sphere_second_moment(self):
        t = sphere(4)
        assert t.moment((2, 0, 0, 0)) == pytest.approx(0.25)
        emp = empirical_moments(sample(t, 200_000, seed=3), 2)
        assert emp[(0, 0, 0, 2)] == pytest.approx(0.25, abs=0.005)


class TestSampling:
    def test_cube_range(self):
        s = sample(hypercube(3), 4, seed=0)
        assert s.points.shape == (4, 3)
        assert set(np.unique(s.points)) <= {-1.0, 1.0}

    def test_gaussian_mean(self):
        s = sample(gaussian(2), 10**5, seed=1)
        assert np.all(np.abs(s.points.mean(axis=0)) <= 0.02)

    def test_sphere_norms(self):
        s = sample(sphere(5), 10, seed=2)
        assert np.allclose(np.linalg.norm(s.points, axis=1), 1.0, atol=1e-12)

    def test_deterministic(self):
        a = sample(gaussian(3), 50, seed=9).points
        b = sample(gaussian(3), 50, seed=9).points
        c = sample(gaussian(3), 50, seed=10).points
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_streams_independent(self):
        assert not np.array_equal(rng_for(1, 0).random(5), rng_for(1, 1).random(5))

    def test_parse_target(self):
        assert parse_target("gaussian:2").dimension == 2
        assert parse_target("hypercube:8").is_hypercube
        with pytest.raises(ValueError):
            parse_target("cauchy:2")
        with pytest.raises(ValueError):
            parse_target("gaussian")


class TestProfile:
    def test_defaults(self):
        p = gaussian(2).profile
        assert (p.alpha, p.C1, p.C2, p.C3) == (1.0, 0.5, 1.0, 0.4)

    @pytest.mark.parametrize("kw", [{"alpha": 0.0}, {"alpha": 1.5}, {"C1": 0.0}, {"C3": -1.0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            DistributionProfile(**kw)

    def test_directional_moment_bound(self):
        X = sample(gaussian(3), 400_000, seed=4).points
        rng = np.random.default_rng(0)
        C2 = gaussian(3).profile.C2
        for _ in range(5):
            u = rng.standard_normal(3)
            u /= np.linalg.norm(u)
            proj = np.abs(X @ u)
            for k in (2, 4, 6):
                assert np.mean(proj**k) ** (1 / k) <= C2 * np.sqrt(k) * 1.01


class TestConcepts:
    def test_sgn_zero_is_plus(self):
        assert sgn(np.array([0.0, -0.0, -1e-300])).tolist() == [1, 1, -1]

    def test_halfspace_on_boundary(self):
        h = Halfspace(np.array([1.0, -1.0]), 0.0)
        assert h(np.array([2.0, 2.0])) == 1

    def test_function_of_one_halfspace_matches(self):
        rng = np.random.default_rng(5)
        w, t = rng.standard_normal(3), 0.3
        X = rng.standard_normal((10_000, 3))
        f = FunctionOfHalfspaces(w[None, :], [t], (-1, 1))
        assert np.array_equal(f.evaluate(X), Halfspace(w, t).evaluate(X))

    def test_function_of_halfspaces_and(self):
        W = np.eye(2)
        f = FunctionOfHalfspaces.from_bits(W, [0.0, 0.0], "0001")
        X = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
        assert f.evaluate(X).tolist() == [1, -1, -1, -1]
        assert f.table_bits() == "0001"

    def test_bad_table(self):
        with pytest.raises(ValueError):
            FunctionOfHalfspaces(np.eye(2), [0, 0], (1, -1, 1))

    def test_parity(self):
        p = Parity((0, 2), 3)
        X = cube_points(3)
        assert np.array_equal(p.evaluate(X), X[:, 0] * X[:, 2])
        assert Parity((), 2).evaluate(X[:, :2]).tolist() == [1] * 8

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(-5, 5),
           st.lists(st.floats(-5, 5), min_size=3, max_size=3))
    def test_halfspace_values(self, w, t, x):
        v = Halfspace(np.array(w), t)(np.array(x))
        assert v in (-1, 1)
        assert v == (1 if np.dot(w, x) + t >= 0 else -1)

    def test_class_sizes(self):
        assert len(parities(4)) == 16
        assert constants(3)[0](np.zeros(3)) == 1


class TestLabeled:
    def test_noiseless(self):
        t = Halfspace(np.array([1.0, 2.0]), -0.1)
        s = draw_labeled(LabeledSource(gaussian(2), t, 0.0), 1000, seed=0)
        assert np.array_equal(s.labels, t.evaluate(s.points))

    def test_half_noise(self):
        n = 40_000
        t = Halfspace(np.array([1.0, 0.0]), 0.0)
        s = draw_labeled(LabeledSource(gaussian(2), t, 0.5), n, seed=1)
        agree = np.mean(s.labels == t.evaluate(s.points))
        assert abs(agree - 0.5) <= 3 / (2 * np.sqrt(n))

    def test_explicit_point_mass(self):
        src = ExplicitSource(np.array([[1.0, 1.0]]), [1], [1.0])
        s = draw_labeled(src, 25, seed=3)
        assert np.all(s.points == 1.0) and np.all(s.labels == 1)

    def test_noise_rate_range(self):
        with pytest.raises(ValueError):
            LabeledSource(gaussian(1), constant(1, 1), 0.6)


class TestConceptOpt:
    def test_realizable(self):
        t = Halfspace(np.array([1.0, -1.0]), 0.2)
        s = draw_labeled(LabeledSource(gaussian(2), t), 200, seed=0)
        assert concept_opt([t], s)[1] == 0.0

    def test_majority_label(self):
        s = LabeledSample(np.zeros((4, 1)), [1, 1, 1, -1])
        best, err = concept_opt(constants(1), s)
        assert best(np.zeros(1)) == 1 and err == 0.25

    def test_parity_scan(self):
        X = cube_points(4)
        target = Parity((1, 3), 4)
        best, err = concept_opt(parities(4), LabeledSample(X, target.evaluate(X)))
        assert err == 0.0 and best.subset == (1, 3)

    def test_ties_first_wins(self):
        s = LabeledSample(np.zeros((2, 1)), [1, -1])
        best, _ = concept_opt(constants(1), s)
        assert best(np.zeros(1)) == 1

    def test_empty_class(self):
        with pytest.raises(EmptyClassError):
            concept_opt([], LabeledSample(np.zeros((1, 1)), [1]))
