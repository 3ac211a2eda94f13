"""Testable agnostic learning through moment matching."""

from .core import (
    DiscreteDistribution,
    Hypothesis,
    LabeledSample,
    MomentVector,
    MultiIndex,
    Polynomial,
    SlackSchedule,
    TesterReport,
    UnlabeledSample,
    index_set,
)
from .distributions import gaussian, hypercube, parse_target, sphere
from .learner import l1_regression, testable_learn
from .moments import SubexpScheduleParams, chebyshev_sample_size, empirical_moments, hypercube_slack, subexp_slack
from .tester import moment_test

__version__ = "0.1.0"
