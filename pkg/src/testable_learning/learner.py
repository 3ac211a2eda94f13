"""Degree-k L1 polynomial regression with a best threshold, gated by the moment tester."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse

from .core import Hypothesis, LabeledSample, Polynomial, SlackSchedule, TesterReport, index_set, monomial_features
from .distributions import TargetDistribution
from .errors import EmptySampleError, ProblemTooLargeError
from .lp import solve_lp
from .tester import moment_test

DEFAULT_FEATURE_CAP = 20000
TIE_BREAK_ROWS = 4096
TIE_BREAK_FEATURES = 64


def _compress(sample: LabeledSample):
    """Distinct ``(x, y)`` rows with their empirical weights."""
    rows = np.column_stack([sample.points, sample.labels.astype(np.float64)])
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    if len(uniq) == len(rows):
        return sample.points, sample.labels.astype(np.float64), np.full(len(rows), 1.0 / len(rows))
    return uniq[:, :-1], uniq[:, -1], counts / counts.sum()


def _l1_dual(phi, y, w, tol):
    n = phi.shape[1]
    res = solve_lp(-y, A_eq=phi.T, b_eq=np.zeros(n), bounds=list(zip(-w, w)), tol=tol)
    return -res.eq_marginals, -res.objective, res.x


def _l1_primal(phi, y, w, tol):
    """``min <w, u + v>`` subject to ``Phi beta + u - v = y`` with ``u, v >= 0``."""
    rows, n = phi.shape
    eye = sparse.identity(rows, format="csr")
    A_eq = sparse.hstack([sparse.csr_matrix(phi), eye, -eye], format="csr")
    c = np.concatenate([np.zeros(n), w, w])
    res = solve_lp(c, A_eq=A_eq, b_eq=y, bounds=[(None, None)] * n + [(0, None)] * (2 * rows), tol=tol)
    return res.x[:n], res.objective


def _min_norm_optimum(phi, y, w, a, beta0):
    """Smallest-norm nonconstant part over the optimal face fixed by the dual point ``a``.

    Complementary slackness: rows with ``|a_i| < w_i`` are fit exactly, rows
    with ``a_i = w_i`` have ``Phi beta <= y`` and rows with ``a_i = -w_i``
    have ``Phi beta >= y``.
    """
    upper = a >= w * (1 - 1e-7)
    lower = a <= -w * (1 - 1e-7)
    inner = ~(upper | lower)
    cons = []
    if inner.any():
        cons.append(optimize.LinearConstraint(phi[inner], y[inner], y[inner]))
    if upper.any():
        cons.append(optimize.LinearConstraint(phi[upper], -np.inf, y[upper]))
    if lower.any():
        cons.append(optimize.LinearConstraint(phi[lower], y[lower], np.inf))
    mask = np.ones(len(beta0))
    mask[0] = 0.0
    res = optimize.minimize(lambda b: 0.5 * np.sum((mask * b) ** 2), beta0, jac=lambda b: mask * b,
                            method="SLSQP", constraints=cons, options={"ftol": 1e-14, "maxiter": 500})
    return res.x if res.success else None


def l1_regression(sample: LabeledSample, k: int, multilinear: bool = False,
                  feature_cap: int = DEFAULT_FEATURE_CAP, tol: float = 1e-9,
                  formulation: str = "dual", tie_break: bool = True) -> Polynomial:
    """Polynomial of degree at most ``k`` minimizing the mean absolute deviation from the labels.

    Repeated ``(x, y)`` rows are merged into weighted atoms first.
    ``formulation="primal"`` solves ``min <w, u + v>`` subject to
    ``Phi beta + u - v = y`` with ``u, v >= 0``.  The default solves the
    equivalent dual ``max <y, a>`` subject to ``Phi^T a = 0``, ``|a_i| <= w_i``,
    which has only one row per monomial, and reads ``beta`` off its equality
    multipliers; if the recovered loss misses the dual optimum it falls back
    to the primal.

    Optima are often not unique on discrete data (the cube).  With
    ``tie_break``, the dual route and at most ``TIE_BREAK_ROWS`` distinct rows
    and ``TIE_BREAK_FEATURES`` monomials,
    the optimum whose nonconstant part has the smallest Euclidean norm is
    returned; it is unique, so symmetric problems get symmetric fits.  ``multilinear`` restricts to
    square-free monomials, which loses nothing on the cube.
    """
    if formulation not in ("primal", "dual"):
        raise ValueError("formulation must be 'primal' or 'dual'")
    if sample.size == 0:
        raise EmptySampleError("cannot regress on an empty sample")
    idx = index_set(k, sample.dimension, multilinear)
    n = len(idx)
    if n > feature_cap:
        raise ProblemTooLargeError(f"{n} monomials exceeds the cap of {feature_cap}")
    X, y, w = _compress(sample)
    phi = monomial_features(X, idx)
    beta = a = None
    if formulation == "dual":
        beta, best, a = _l1_dual(phi, y, w, tol)
        if w @ np.abs(phi @ beta - y) > best + 1e-7:
            beta = None
    if beta is None:
        beta, best = _l1_primal(phi, y, w, tol)
    if tie_break and a is not None and len(y) <= TIE_BREAK_ROWS and 1 < n <= TIE_BREAK_FEATURES:
        loss = w @ np.abs(phi @ beta - y)
        alt = _min_norm_optimum(phi, y, w, a, beta)
        # keep the tie-broken fit only if it is optimal to round-off
        if alt is not None and w @ np.abs(phi @ alt - y) <= loss + 1e-10 * max(1.0, loss):
            beta = alt
    return Polynomial.from_array(idx, beta, k=k)


def mean_absolute_loss(p: Polynomial, sample: LabeledSample) -> float:
    return float(np.mean(np.abs(p.evaluate_many(sample.points) - sample.labels)))


def select_threshold(p: Polynomial, sample: LabeledSample) -> Hypothesis:
    """Threshold ``p`` at the cut with the fewest training mistakes.

    Candidates are the midpoints between consecutive distinct values of ``p``
    on the sample (smallest first), then the ``-inf`` and ``+inf`` constant
    classifiers; the first candidate achieving the minimum wins.
    """
    if sample.size == 0:
        raise EmptySampleError("cannot pick a threshold on an empty sample")
    vals = p.evaluate_many(sample.points)
    y = sample.labels
    order = np.argsort(vals, kind="stable")
    sv, sy = vals[order], y[order]
    distinct = np.unique(sv)
    mids = (distinct[:-1] + distinct[1:]) / 2
    candidates = np.concatenate([mids, [-np.inf, np.inf]])
    below = np.searchsorted(sv, candidates, side="left")
    pos_below = np.concatenate([[0], np.cumsum(sy == 1)])
    neg_below = np.concatenate([[0], np.cumsum(sy == -1)])
    errors = pos_below[below] + (neg_below[-1] - neg_below[below])
    best = int(np.argmin(errors))
    return Hypothesis(p, float(candidates[best]))


def zero_one_loss(h, sample: LabeledSample) -> float:
    if sample.size == 0:
        raise EmptySampleError("empty sample")
    return float(np.mean(np.asarray(h.evaluate(sample.points)) != sample.labels))


@dataclass(frozen=True)
class LearnResult:
    accepted: bool
    report: TesterReport
    hypothesis: Hypothesis | None = None
    training_l1: float | None = None


def testable_learn(sample: LabeledSample, target: TargetDistribution, k: int, slack: SlackSchedule,
                   feature_cap: int = DEFAULT_FEATURE_CAP) -> LearnResult:
    """Run the moment test on the marginal; if it accepts, regress and threshold on the same sample."""
    report = moment_test(sample.marginal(), target, k, slack)
    if not report.accepted:
        return LearnResult(False, report)
    multilinear = target.is_hypercube or slack.multilinear
    p = l1_regression(sample, k, multilinear=multilinear, feature_cap=feature_cap)
    return LearnResult(True, report, select_threshold(p, sample), mean_absolute_loss(p, sample))


testable_learn.__test__ = False  # keep pytest from collecting the name
