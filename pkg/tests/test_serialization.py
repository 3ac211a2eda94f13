import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from testable_learning.core import Hypothesis, MomentVector, MultiIndex, Polynomial, SlackSchedule, TesterReport, UnlabeledSample, Violation
from testable_learning.distributions import FunctionOfHalfspaces, Halfspace, LookupTable, Parity, hypercube
from testable_learning.duality import cube_domain, solve_dual, solve_primal
from testable_learning.moments import SubexpScheduleParams, empirical_moments, subexp_slack
from testable_learning.serialization import (
    concept_from_dict,
    concept_to_dict,
    duality_certificate,
    dumps,
    hypothesis_from_dict,
    hypothesis_to_dict,
    loads,
    moment_vector_from_dict,
    moment_vector_to_dict,
    parse_float,
    polynomial_from_dict,
    polynomial_to_dict,
    slack_from_dict,
    slack_to_dict,
    tester_report_from_dict,
    tester_report_to_dict,
)
from testable_learning.tester import moment_test


class TestEmitter:
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_floats_round_trip(self, x):
        assert float(loads(dumps(x))) == x

    def test_seventeen_digits(self):
        assert dumps(0.1) == "0.10000000000000001"
        assert dumps(1.0) == "1.0"
        assert dumps(1e300) == "1.0000000000000001e+300"

    def test_non_finite(self):
        text = dumps([math.inf, -math.inf, math.nan])
        assert json.loads(text) == ["inf", "-inf", "nan"]
        assert parse_float("inf") == math.inf and math.isnan(parse_float("nan"))

    def test_numpy_values(self):
        doc = {"a": np.float64(0.5), "b": np.int64(3), "c": np.bool_(True), "d": np.arange(2)}
        assert loads(dumps(doc)) == {"a": 0.5, "b": 3, "c": True, "d": [0, 1]}

    def test_deterministic_and_ordered(self):
        doc = {"z": 1, "a": [1.5, None, "x"]}
        assert dumps(doc) == dumps(doc)
        assert list(loads(dumps(doc))) == ["z", "a"]

    def test_compact(self):
        assert dumps({"a": [1, 2]}, indent=None) == '{"a": [1,2]}'

    def test_unknown_type(self):
        with pytest.raises(TypeError):
            dumps(object())


class TestObjects:
    def test_moment_vector(self):
        mv = empirical_moments(UnlabeledSample(np.array([[1.0, 2.0]])), 2)
        doc = moment_vector_to_dict(mv)
        assert doc["schema"] == 1
        assert list(doc["entries"]) == ["0,0", "0,1", "1,0", "0,2", "1,1", "2,0"]
        back = moment_vector_from_dict(loads(dumps(doc)))
        assert back.entries == mv.entries

    def test_slack_with_inf(self):
        s = SlackSchedule(1, 2, {MultiIndex((0, 0)): 0.0, MultiIndex((0, 1)): math.inf,
                                 MultiIndex((1, 0)): 0.25}, False, "custom", {})
        back = slack_from_dict(loads(dumps(slack_to_dict(s))))
        assert back.entries == s.entries

    def test_subexp_params_survive(self):
        s = subexp_slack(SubexpScheduleParams(k=4, d=2))
        back = slack_from_dict(loads(dumps(slack_to_dict(s))))
        assert back.entries == s.entries and back.provenance == s.provenance
        assert back.params["M_k"] == s.params["M_k"]

    def test_polynomial(self, rng):
        idx = [MultiIndex((0, 0)), MultiIndex((1, 0)), MultiIndex((1, 1))]
        p = Polynomial.from_array(idx, rng.standard_normal(3), k=2)
        assert polynomial_from_dict(loads(dumps(polynomial_to_dict(p)))).coefficients == p.coefficients

    @pytest.mark.parametrize("threshold", [0.25, math.inf, -math.inf])
    def test_hypothesis(self, threshold):
        h = Hypothesis(Polynomial(2, 2, {MultiIndex((1, 1)): 0.3}), threshold)
        doc = hypothesis_to_dict(h)
        assert doc["type"] == "hypothesis"
        back = hypothesis_from_dict(loads(dumps(doc)))
        X = np.array([[1.0, 1.0], [1.0, -1.0]])
        np.testing.assert_array_equal(back.predict(X), h.predict(X))
        assert back.threshold == threshold

    def test_hypothesis_wrong_type(self):
        with pytest.raises(ValueError):
            hypothesis_from_dict({"type": "polynomial"})

    def test_tester_report(self):
        s = UnlabeledSample(np.ones((3, 2)))
        rep = moment_test(s, hypercube(2), 1, SlackSchedule.uniform(0.1, 1, 2, True))
        back = tester_report_from_dict(loads(dumps(tester_report_to_dict(rep))))
        assert back == rep
        rep2 = TesterReport(True, (), 0.0)
        assert tester_report_from_dict(tester_report_to_dict(rep2)) == rep2
        assert isinstance(back.violations[0], Violation)

    @pytest.mark.parametrize("concept", [
        Halfspace(np.array([1.0, -2.0]), 0.5),
        Parity((0, 2), 3),
        LookupTable([[0.0, 1.0], [2.0, 3.0]], [1, -1], default=-1),
    ])
    def test_concepts(self, concept, rng):
        back = concept_from_dict(loads(dumps(concept_to_dict(concept))))
        X = rng.standard_normal((20, concept.dimension if hasattr(concept, "dimension") else 2))
        if isinstance(concept, LookupTable):
            X = np.vstack([concept.points, X])
        np.testing.assert_array_equal(back.evaluate(X), concept.evaluate(X))

    def test_function_of_halfspaces(self, rng):
        f = FunctionOfHalfspaces.from_bits([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0], [1, -1, -1, 1])
        back = concept_from_dict(concept_to_dict(f))
        X = rng.standard_normal((50, 2))
        np.testing.assert_array_equal(back.evaluate(X), f.evaluate(X))

    def test_unknown_concept(self):
        with pytest.raises(ValueError):
            concept_from_dict({"kind": "tree"})

    def test_duality_certificate(self):
        dom = cube_domain(2)
        sigma = dom.moments(1, multilinear=True)
        slack = SlackSchedule.uniform(0.1, 1, 2, True)
        f = Parity((0,), 2)
        cert = duality_certificate(solve_primal(f, dom, sigma, slack), solve_dual(f, dom, sigma, slack), 0.0)
        doc = loads(dumps(cert))
        assert set(doc) >= {"primal", "dual", "gap", "pointwise_slack"}
        assert len(doc["primal"]["weights"]) == 4
        assert doc["dual"]["direction"] == "upper"
