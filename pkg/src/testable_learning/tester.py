"""Moment-matching testers and the certificates built on them."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from .core import (
    DiscreteDistribution,
    SlackSchedule,
    TesterReport,
    UnlabeledSample,
    Violation,
    index_set,
    monomial_features,
)
from .distributions import TargetDistribution, cube_points
from .errors import DimensionError, DomainTooLargeError, EmptySampleError, NormalizationError
from .lp import solve_lp
from .moments import SubexpScheduleParams, empirical_moments, subexp_slack

MAX_CUBE_DIM = 14


def moment_test(sample: UnlabeledSample, target: TargetDistribution, k: int, slack: SlackSchedule) -> TesterReport:
    """Accept iff ``|empirical_I - target_I| <= slack_I`` for every nonzero index of degree at most ``k``."""
    if slack.degree_bound != k or slack.dimension != target.dimension:
        raise DimensionError(
            f"slack is for (k={slack.degree_bound}, d={slack.dimension}), test is for (k={k}, d={target.dimension})"
        )
    if sample.dimension != target.dimension:
        raise DimensionError("sample and target dimensions differ")
    if sample.size == 0:
        raise EmptySampleError("cannot test an empty sample")
    emp = empirical_moments(sample, k, slack.multilinear)
    violations = []
    worst = 0.0
    for I, delta in slack.entries.items():
        if I.is_zero():
            continue
        e, t = emp.entries[I], target.moment(I)
        gap = abs(e - t)
        if not gap <= delta:
            violations.append(Violation(I, e, t, delta))
        worst = max(worst, gap / delta)
    return TesterReport(not violations, tuple(violations), worst)


# ----------------------------------------------------------------------------
# almost k-wise independence


def _cube_index(points: np.ndarray) -> np.ndarray:
    if not np.all(np.abs(points) == 1):
        raise ValueError("points must lie in {-1, +1}^d")
    d = points.shape[1]
    bits = (points > 0).astype(np.int64)
    return bits @ (1 << np.arange(d - 1, -1, -1))


def cube_weights(dist: DiscreteDistribution) -> np.ndarray:
    """Weights of ``dist`` on the full cube in ``cube_points`` order."""
    d = dist.dimension
    if d > MAX_CUBE_DIM:
        raise DomainTooLargeError(f"d={d} exceeds the enumerable limit {MAX_CUBE_DIM}")
    out = np.zeros(2**d)
    np.add.at(out, _cube_index(dist.points), dist.weights)
    return out


def max_bias(dist: DiscreteDistribution, k: int) -> float:
    """Largest ``|E[x_I]|`` over nonzero multilinear indices of degree at most ``k``."""
    idx = index_set(k, dist.dimension, multilinear=True)[1:]
    if not idx:
        return 0.0
    return float(np.max(np.abs(dist.weights @ monomial_features(dist.points, idx))))


def almost_kwise_tv(dist: DiscreteDistribution, k: int, tol: float = 1e-9) -> tuple[float, DiscreteDistribution]:
    """Total-variation distance from ``dist`` to the nearest exactly ``k``-wise independent distribution.

    Solved as an LP over the ``2^d`` atoms; returns the optimum and a witness.
    """
    d = dist.dimension
    D = cube_weights(dist)
    atoms = cube_points(d)
    N = len(D)
    idx = index_set(k, d, multilinear=True)[1:]
    # variables [w (N), s (N)]; s >= |D - w| elementwise
    c = np.concatenate([np.zeros(N), np.full(N, 0.5)])
    eye = sparse.identity(N, format="csr")
    A_ub = sparse.vstack([sparse.hstack([-eye, -eye]), sparse.hstack([eye, -eye])], format="csr")
    b_ub = np.concatenate([-D, D])
    moments = monomial_features(atoms, idx).T if idx else np.zeros((0, N))
    A_eq = np.vstack([np.ones((1, N)), moments])
    A_eq = np.hstack([A_eq, np.zeros((A_eq.shape[0], N))])
    b_eq = np.concatenate([[1.0], np.zeros(len(idx))])
    res = solve_lp(c, A_ub, b_ub, A_eq, b_eq, bounds=(0, None), tol=tol)
    w = np.clip(res.x[:N], 0.0, None)
    w /= w.sum()
    return float(res.objective), DiscreteDistribution(atoms, w)


@dataclass(frozen=True)
class AlonBoundCheck:
    holds: bool
    tv: float
    delta: float
    bound: float

    def __bool__(self) -> bool:
        return self.holds


def verify_alon_bound(dist: DiscreteDistribution, k: int) -> AlonBoundCheck:
    """Check that the distance to k-wise independence is at most ``max_bias * d**k``."""
    delta = max_bias(dist, k)
    tv, _ = almost_kwise_tv(dist, k)
    bound = delta * dist.dimension**k
    return AlonBoundCheck(tv <= bound + 1e-9, tv, delta, bound)


# ----------------------------------------------------------------------------
# anticoncentration


def interval_mass(sample: UnlabeledSample, u, a: float, b: float) -> float:
    """Fraction of the sample with ``<x, u>`` in the closed interval ``[a, b]``."""
    u = np.asarray(u, dtype=np.float64)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise NormalizationError(f"direction must be a unit vector (norm {np.linalg.norm(u)})")
    if a > b:
        raise ValueError("need a <= b")
    proj = sample.points @ u
    inside = (proj >= a) & (proj <= b)
    return float(np.dot(sample.weights(), inside))


@dataclass(frozen=True)
class IntervalCertificate:
    direction: tuple
    interval: tuple
    empirical: float
    bound: float
    margin: float
    passed: bool
    certified: bool


@dataclass(frozen=True)
class AnticoncentrationReport:
    certified: bool
    tester: TesterReport
    entries: tuple

    @property
    def all_passed(self) -> bool:
        return self.certified and all(e.passed for e in self.entries)


def anticoncentration_certify(
    sample: UnlabeledSample,
    target: TargetDistribution,
    params: SubexpScheduleParams,
    eps: float,
    directions: Sequence,
    intervals: Sequence[tuple[float, float]],
    tester_report: TesterReport | None = None,
) -> AnticoncentrationReport:
    """Interval-mass upper bounds ``C3 |T| + eps`` for a sample that passed the two-halfspace moment test.

    Each entry passes when the empirical mass is at most the bound plus a
    ``3/sqrt(m)`` sampling margin.  Entries are marked uncertified when the
    moment test (run here unless ``tester_report`` is given) rejected.
    """
    if target.profile is None:
        raise ValueError("anticoncentration needs a target profile with C3")
    if tester_report is None:
        two = dataclasses.replace(params, p=2)
        tester_report = moment_test(sample, target, two.k, subexp_slack(two))
    certified = tester_report.accepted
    margin = 3.0 / math.sqrt(sample.size)
    entries = []
    for u in directions:
        for a, b in intervals:
            mass = interval_mass(sample, u, a, b)
            bound = target.profile.C3 * (b - a) + eps
            entries.append(IntervalCertificate(
                tuple(float(v) for v in u), (float(a), float(b)), mass, bound, margin,
                bool(mass <= bound + margin), certified,
            ))
    return AnticoncentrationReport(certified, tester_report, tuple(entries))
