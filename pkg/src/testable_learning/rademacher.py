"""Empirical Rademacher complexity, the Rademacher tester-learner and the fooling lower bound."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import LabeledSample, SlackSchedule, TesterReport, UnlabeledSample
from .distributions import (
    Concept,
    ExplicitSource,
    LookupTable,
    TargetDistribution,
    concept_opt,
    draw_labeled,
    evaluate_class,
    rng_for,
    sample,
)
from .errors import EmptyClassError, InvalidRegimeError
from .tester import moment_test

DEFAULT_SIGMA_DRAWS = 2000
EXHAUSTIVE = -1
_SIGMA_CHUNK = 256


@dataclass(frozen=True)
class RademacherEstimate:
    mean: float
    std_error: float
    sigma_draws: int
    sample_size: int
    exact: bool = False


def _sup_correlations(F: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    """``max_f |<sigma, f>| / m`` for each row of ``sigmas``."""
    return np.abs(sigmas @ F.T).max(axis=1) / F.shape[1]


def empirical_rademacher(concepts: Sequence[Concept], sample_: UnlabeledSample,
                         sigma_draws: int = DEFAULT_SIGMA_DRAWS, seed: int = 0) -> RademacherEstimate:
    """Estimate ``E_sigma sup_f |(1/m) sum_i sigma_i f(x_i)|`` by exhaustive scan over the class.

    ``sigma_draws = -1`` enumerates all ``2^m`` sign vectors (``m <= 20``)
    and returns the exact value.
    """
    if len(concepts) == 0:
        raise EmptyClassError("concept class is empty")
    F = evaluate_class(concepts, sample_.points).astype(np.float64)
    m = F.shape[1]
    if sigma_draws == EXHAUSTIVE:
        if m > 20:
            raise ValueError("exhaustive enumeration needs m <= 20")
        total = 0.0
        signs = itertools.product((-1.0, 1.0), repeat=m)
        while True:
            block = np.array(list(itertools.islice(signs, 4096)))
            if block.size == 0:
                break
            total += _sup_correlations(F, block).sum()
        return RademacherEstimate(total / 2**m, 0.0, 2**m, m, exact=True)
    if sigma_draws < 1:
        raise ValueError("sigma_draws must be positive (or -1 for exhaustive)")
    rng = rng_for(seed, 7)
    sups = []
    for start in range(0, sigma_draws, _SIGMA_CHUNK):
        n = min(_SIGMA_CHUNK, sigma_draws - start)
        block = (2.0 * rng.integers(0, 2, size=(n, m)) - 1.0)
        sups.append(_sup_correlations(F, block))
    sups = np.concatenate(sups)
    se = float(sups.std(ddof=1) / math.sqrt(len(sups))) if len(sups) > 1 else 0.0
    return RademacherEstimate(float(sups.mean()), se, sigma_draws, m)


@dataclass(frozen=True)
class RademacherDecision:
    accepted: bool
    estimate: RademacherEstimate
    upper: float
    concept: Concept | None = None
    training_error: float | None = None


def rademacher_tester_learner(concepts: Sequence[Concept], sample_: LabeledSample, eps: float,
                              sigma_draws: int = DEFAULT_SIGMA_DRAWS, seed: int = 0) -> RademacherDecision:
    """Accept iff the estimate plus two standard errors is at most ``eps / 4``; then run ERM."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    est = empirical_rademacher(concepts, sample_.marginal(), sigma_draws, seed)
    upper = est.mean + 2.0 * est.std_error
    if upper > eps / 4:
        return RademacherDecision(False, est, upper)
    best, err = concept_opt(concepts, sample_)
    return RademacherDecision(True, est, upper, best, err)


# ----------------------------------------------------------------------------
# learners used by the fooling experiment


class Memorizer:
    """Stores the training sample verbatim; unseen points get ``default``."""

    def __init__(self, default: int = 1):
        self.default = default

    def fit(self, train: LabeledSample) -> LookupTable:
        return LookupTable(train.points, train.labels, self.default)

    def opt(self, source: ExplicitSource) -> float:
        """Best achievable error by any function of the support: minority mass of each repeated atom."""
        _, inverse = np.unique(source.points, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        pos = np.bincount(inverse, weights=source.weights * (source.labels == 1))
        neg = np.bincount(inverse, weights=source.weights * (source.labels == -1))
        return float(np.minimum(pos, neg).sum())


class ERMLearner:
    def __init__(self, concepts: Sequence[Concept]):
        if len(concepts) == 0:
            raise EmptyClassError("concept class is empty")
        self.concepts = list(concepts)

    def fit(self, train: LabeledSample) -> Concept:
        return concept_opt(self.concepts, train)[0]

    def opt(self, source: ExplicitSource) -> float:
        labeled = LabeledSample(source.points, source.labels)
        return concept_opt(self.concepts, labeled, weights=source.weights)[1]


@dataclass(frozen=True)
class FoolingDistribution:
    source: ExplicitSource
    duplicates_found: bool


def build_fooling_distribution(marginal: TargetDistribution, M: int, seed: int) -> FoolingDistribution:
    """Uniform distribution over ``M`` marginal draws carrying independent uniform random labels."""
    if M < 1:
        raise ValueError("M must be at least 1")
    pts = sample(marginal, M, seed, stream=0).points
    labels = 2 * rng_for(seed, 1).integers(0, 2, size=M) - 1
    dup = len(np.unique(pts, axis=0)) < M
    return FoolingDistribution(ExplicitSource(pts, labels, np.full(M, 1.0 / M)), dup)


@dataclass(frozen=True)
class TesterConfig:
    __test__ = False

    k: int
    slack: SlackSchedule


@dataclass(frozen=True)
class FoolingReport:
    M: int
    m: int
    opt_on_D: float
    tester_accepted: bool
    learner_heldout_error: float
    duplicates_found: bool
    training_error: float
    regime_ok: bool
    max_violation_ratio: float


def fooling_experiment(marginal: TargetDistribution, M: int, m: int, tester: TesterConfig,
                       learner, seed: int, enforce_regime: bool = False) -> FoolingReport:
    """Build the random-label fooling distribution, test and train on an ``m``-subsample, score on all of it.

    ``learner`` is a ``Memorizer``, an ``ERMLearner`` or a plain concept list
    (wrapped in ``ERMLearner``).  The held-out error is exact: it is the
    weighted error over every atom of the fooling distribution.
    """
    if m > M:
        raise InvalidRegimeError(f"subsample size m={m} exceeds M={M}")
    regime_ok = m <= math.sqrt(M) / 10
    if enforce_regime and not regime_ok:
        raise InvalidRegimeError(f"m={m} is outside the m <= sqrt(M)/10 regime for M={M}")
    if not hasattr(learner, "fit"):
        learner = ERMLearner(learner)
    fooling = build_fooling_distribution(marginal, M, seed)
    src = fooling.source
    train = draw_labeled(src, m, seed, stream=2)
    report: TesterReport = moment_test(train.marginal(), marginal, tester.k, tester.slack)
    h = learner.fit(train)
    train_err = float(np.mean(h.evaluate(train.points) != train.labels))
    heldout = src.error(h.evaluate(src.points))
    return FoolingReport(M, m, learner.opt(src), report.accepted, heldout, fooling.duplicates_found,
                         train_err, regime_ok, report.max_violation_ratio)
