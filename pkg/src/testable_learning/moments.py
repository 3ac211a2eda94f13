"""Multi-index enumeration, empirical moments, slack schedules and sample sizes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MomentVector, MultiIndex, SlackSchedule, UnlabeledSample, index_set, monomial_features
from .errors import EmptySampleError

# rows per block when accumulating moment sums; blocks are summed in order
CHUNK_ROWS = 1 << 16


def enumerate_indices(k: int, d: int, multilinear: bool = False) -> tuple[MultiIndex, ...]:
    """The ``C(d + k, k)`` indices of degree at most ``k`` (zero first, graded-lex)."""
    return index_set(k, d, multilinear)


def empirical_moments(sample: UnlabeledSample, k: int, multilinear: bool = False) -> MomentVector:
    """Average of every monomial of degree at most ``k`` over the sample.

    With ``multilinear`` only square-free indices are enumerated, which is
    the reduced form on the cube where ``x_j**2 = 1``.
    """
    if sample.size == 0:
        raise EmptySampleError("cannot take moments of an empty sample")
    idx = index_set(k, sample.dimension, multilinear)
    X = sample.points
    w = None if sample.counts is None else sample.counts.astype(np.float64)
    total = np.zeros(len(idx))
    for start in range(0, X.shape[0], CHUNK_ROWS):
        block = monomial_features(X[start:start + CHUNK_ROWS], idx)
        if w is None:
            total += block.sum(axis=0)
        else:
            total += w[start:start + CHUNK_ROWS] @ block
    entries = dict(zip(idx, total / sample.size))
    entries[idx[0]] = 1.0
    return MomentVector(k, sample.dimension, entries, multilinear)


def hypercube_slack(eps: float, d: int, k: int) -> SlackSchedule:
    """Uniform bias tolerance ``eps * d**-k / 4`` on every nonzero multilinear index."""
    if not 0 < eps < 1 or k < 1:
        raise ValueError("need eps in (0, 1) and k >= 1")
    delta = eps * float(d) ** (-k) / 4
    sched = SlackSchedule.uniform(delta, k, d, multilinear=True)
    return SlackSchedule(sched.degree_bound, d, sched.entries, True, "uniform",
                         {"delta": delta, "eps": eps, "source": "hypercube"})


@dataclass(frozen=True)
class SubexpScheduleParams:
    k: int
    d: int
    p: int = 1
    alpha: float = 1.0
    C2: float = 1.0

    def __post_init__(self):
        if self.k < 2 or self.k % 2:
            raise ValueError(f"k must be an even integer >= 2, got {self.k}")
        if self.d < 1 or self.p < 1:
            raise ValueError("need d >= 1 and p >= 1")
        if not 0 < self.alpha <= 1 or not self.C2 > 0:
            raise ValueError("need alpha in (0, 1] and C2 > 0")


def log_moment_bound(params: SubexpScheduleParams) -> float:
    """``log M_k`` with ``M_k = p^{k/2} C2^k k^{k/(1+alpha)}``."""
    k, p = params.k, params.p
    return 0.5 * k * math.log(p) + k * math.log(params.C2) + k / (1 + params.alpha) * math.log(k)


def per_degree_slack(params: SubexpScheduleParams) -> dict[int, float]:
    """``eta_j = j!/(2k) * (6 M_k / k!)^((j+1)/(k+1))`` for ``1 <= j <= k``, in log space."""
    k = params.k
    log_ratio = math.log(6.0) + log_moment_bound(params) - math.lgamma(k + 1)
    return {
        j: math.exp(math.lgamma(j + 1) - math.log(2 * k) + (j + 1) / (k + 1) * log_ratio)
        for j in range(1, k + 1)
    }


def subexp_slack(params: SubexpScheduleParams) -> SlackSchedule:
    """Per-index slack ``eta_j * d^-j * p^(-j/2)`` for ``|I| = j``."""
    k, d, p = params.k, params.d, params.p
    eta = per_degree_slack(params)
    by_degree = {
        j: math.exp(math.log(e) - j * math.log(d) - 0.5 * j * math.log(p)) for j, e in eta.items()
    }
    entries = {I: (0.0 if I.is_zero() else by_degree[I.degree()]) for I in index_set(k, d)}
    info = {
        "p": p, "alpha": params.alpha, "C2": params.C2,
        "M_k": math.exp(log_moment_bound(params)),
        "eta": {str(j): v for j, v in eta.items()},
    }
    return SlackSchedule(k, d, entries, False, "subexponential", info)


def chebyshev_sample_size(slack: SlackSchedule, params: SubexpScheduleParams, confidence_slack: float) -> int:
    """Union-bound Chebyshev sample size for all moments to land within ``slack``.

    ``m = |I(k,d)| * C2^{2k} (2k)^{2k/(1+alpha)} / (min_{|I|=k} slack_I)^2 / confidence_slack``.
    The top-degree index class has the weakest concentration and its bound
    covers the lower degrees.
    """
    if not 0 < confidence_slack < 1:
        raise ValueError("confidence_slack must lie in (0, 1)")
    k = params.k
    top = min(v for I, v in slack.entries.items() if I.degree() == k)
    n_idx = len(index_set(k, params.d))
    log_var = 2 * k * math.log(params.C2) + 2 * k / (1 + params.alpha) * math.log(2 * k)
    log_m = math.log(n_idx) + log_var - 2 * math.log(top) - math.log(confidence_slack)
    m = math.exp(log_m)
    # guard against exp/log round-off pushing an exact integer just above itself
    nearest = round(m)
    return int(nearest) if abs(m - nearest) <= 1e-9 * max(1.0, m) else math.ceil(m)
