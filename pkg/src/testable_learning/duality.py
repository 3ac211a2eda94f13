"""Finite-domain moment-matching LPs, sandwiching polynomials and the lambda-distance.

On a finite domain ``Omega`` with reference weights ``D`` the two programs are

primal:  max_{D'} E_{D'}[f]   s.t.  |E_{D'}[x_I] - sigma_I| <= Delta_I,  D' a probability vector
dual:    min_beta sum_I beta_I sigma_I + sum_I |beta_I| Delta_I   s.t.  sum_I beta_I x_I >= f(x) on Omega

and they have equal optima whenever the primal is feasible (it is when
``sigma`` are the moments of ``D``).  The optimal ``beta`` is an upper
sandwiching polynomial; running the same programs on ``-f`` gives the lower one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from .core import (
    DiscreteDistribution,
    MomentVector,
    Polynomial,
    SlackSchedule,
    UnlabeledSample,
    monomial_features,
)
from .distributions import cube_points
from .errors import DimensionError, DomainTooLargeError, ProblemTooLargeError
from .lp import solve_lp
from .tester import MAX_CUBE_DIM

LP_TOL = 1e-9
DEFAULT_CAP = 5_000_000  # |domain| * |indices|
GAP_TOL = 1e-5

# default grid for the lambda-distance
DEFAULT_T_GRID = tuple(np.logspace(-1, 2, 40))
DEFAULT_T_PER_T = 512

FiniteDomain = DiscreteDistribution


def finite_domain(points, weights=None) -> DiscreteDistribution:
    """Validate distinct points and wrap them (uniform weights by default)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if len(np.unique(pts, axis=0)) != len(pts):
        raise ValueError("domain points must be distinct")
    if weights is None:
        return DiscreteDistribution.uniform(pts)
    return DiscreteDistribution(pts, np.asarray(weights, dtype=np.float64))


def cube_domain(d: int) -> DiscreteDistribution:
    if d > MAX_CUBE_DIM:
        raise DomainTooLargeError(f"d={d} exceeds the enumerable limit {MAX_CUBE_DIM}")
    return DiscreteDistribution.uniform(cube_points(d))


def gaussian_grid_domain(n_points: int = 801, half_width: float = 8.0) -> DiscreteDistribution:
    """1-D grid on ``[-half_width, half_width]`` weighted by the normalized Gaussian density."""
    x = np.linspace(-half_width, half_width, n_points)
    w = np.exp(-0.5 * x * x)
    return DiscreteDistribution(x[:, None], w / w.sum())


def _values(f, domain: DiscreteDistribution) -> np.ndarray:
    if hasattr(f, "evaluate"):
        return np.asarray(f.evaluate(domain.points), dtype=np.float64)
    if callable(f):
        return np.asarray(f(domain.points), dtype=np.float64)
    vals = np.asarray(f, dtype=np.float64)
    if vals.shape != (len(domain),):
        raise DimensionError("function values must have one entry per domain point")
    return vals


def _design(domain: DiscreteDistribution, sigma: MomentVector, slack: SlackSchedule, cap: int):
    if sigma.indices != slack.indices:
        raise DimensionError("moment vector and slack schedule use different index sets")
    if sigma.dimension != domain.dimension:
        raise DimensionError("moment vector and domain dimensions differ")
    n = len(sigma.indices)
    if len(domain) * n > cap:
        raise ProblemTooLargeError(f"{len(domain)} points x {n} monomials exceeds the cap {cap}")
    return sigma.indices, monomial_features(domain.points, sigma.indices), sigma.as_array(), slack.as_array()


@dataclass(frozen=True)
class DualSolution:
    """A sandwiching polynomial from the dual LP.

    ``direction == "upper"``: ``polynomial >= f`` on the domain and
    ``objective = sum beta sigma + <Delta, |beta|>`` with ``beta`` its coefficients.
    ``direction == "lower"``: ``polynomial <= f``; ``beta`` is the negated
    polynomial and ``objective`` the optimum of the program for ``-f``.
    ``pointwise_slack`` is ``min (beta(x) - g(x))`` with ``g = f`` or ``-f``.
    """

    polynomial: Polynomial
    objective: float
    pointwise_slack: float
    direction: str

    @property
    def bound(self) -> float:
        """Upper (or lower) bound on ``E_{D'}[f]`` over the moment-matching window."""
        return self.objective if self.direction == "upper" else -self.objective


def solve_dual(f, domain: DiscreteDistribution, sigma: MomentVector, slack: SlackSchedule,
               direction: str = "upper", cap: int = DEFAULT_CAP, tol: float = LP_TOL) -> DualSolution:
    if direction not in ("upper", "lower"):
        raise ValueError("direction must be 'upper' or 'lower'")
    idx, phi, s, delta = _design(domain, sigma, slack, cap)
    g = _values(f, domain)
    if direction == "lower":
        g = -g
    n = len(idx)
    finite = np.isfinite(delta)
    # beta = bp - bm with bp, bm >= 0; coefficients priced at infinity are pinned to 0
    cost_delta = np.where(finite, delta, 0.0)
    c = np.concatenate([s + cost_delta, -s + cost_delta])
    bounds = [(0, None) if fin else (0, 0) for fin in finite] * 2
    A_ub = np.hstack([-phi, phi])
    res = solve_lp(c, A_ub=A_ub, b_ub=-g, bounds=bounds, tol=tol)
    beta = res.x[:n] - res.x[n:]
    beta[~finite] = 0.0
    objective = float(beta @ s + np.abs(beta) @ cost_delta)
    slack_min = float(np.min(phi @ beta - g))
    poly = Polynomial.from_array(idx, beta if direction == "upper" else -beta, k=sigma.degree_bound)
    return DualSolution(poly, objective, slack_min, direction)


@dataclass(frozen=True)
class PrimalSolution:
    weights: np.ndarray
    objective: float
    moment_residuals: dict

    def distribution(self, domain: DiscreteDistribution) -> DiscreteDistribution:
        return DiscreteDistribution(domain.points, self.weights)


def _primal_constraints(phi, s, delta):
    rows = [i for i in range(1, len(s)) if np.isfinite(delta[i])]
    P = phi[:, rows].T
    A_ub = np.vstack([P, -P])
    b_ub = np.concatenate([s[rows] + delta[rows], -(s[rows] - delta[rows])])
    return A_ub, b_ub


def _solve_window(c, phi, s, delta, tol):
    N = phi.shape[0]
    A_ub, b_ub = _primal_constraints(phi, s, delta)
    res = solve_lp(c, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                   A_eq=np.ones((1, N)), b_eq=[1.0], bounds=(0, None), tol=tol)
    w = np.clip(res.x, 0.0, None)
    return w / w.sum()


def solve_primal(f, domain: DiscreteDistribution, sigma: MomentVector, slack: SlackSchedule,
                 direction: str = "max", cap: int = DEFAULT_CAP, tol: float = LP_TOL) -> PrimalSolution:
    """Extreme value of ``E_{D'}[f]`` over distributions on the domain inside the moment window."""
    if direction not in ("max", "min"):
        raise ValueError("direction must be 'max' or 'min'")
    idx, phi, s, delta = _design(domain, sigma, slack, cap)
    g = _values(f, domain)
    w = _solve_window(-g if direction == "max" else g, phi, s, delta, tol)
    resid = dict(zip(idx, np.abs(w @ phi - s)))
    return PrimalSolution(w, float(w @ g), resid)


def random_primal_feasible(domain: DiscreteDistribution, sigma: MomentVector, slack: SlackSchedule,
                           rng: np.random.Generator, cap: int = DEFAULT_CAP) -> DiscreteDistribution:
    """A random point of the moment window: a random LP vertex mixed with the base weights.

    Requires ``sigma`` to be the moments of ``domain`` itself, so that the
    base weights are feasible and the window is convex around them.
    """
    idx, phi, s, delta = _design(domain, sigma, slack, cap)
    vertex = _solve_window(rng.standard_normal(len(domain)), phi, s, delta, LP_TOL)
    lam = rng.uniform()
    w = lam * vertex + (1 - lam) * domain.weights
    return DiscreteDistribution(domain.points, w / w.sum())


@dataclass(frozen=True)
class DualityGapReport:
    primal_max: float
    primal_min: float
    dual_upper: float
    dual_lower: float
    upper_gap: float
    lower_gap: float
    passed: bool
    upper: DualSolution
    lower: DualSolution


def strong_duality_check(f, domain, sigma, slack, tol: float = GAP_TOL) -> DualityGapReport:
    """Solve all four programs and compare optima.  ``dual_lower`` is the lower bound ``-gamma'``."""
    pmax = solve_primal(f, domain, sigma, slack, "max").objective
    pmin = solve_primal(f, domain, sigma, slack, "min").objective
    up = solve_dual(f, domain, sigma, slack, "upper")
    lo = solve_dual(f, domain, sigma, slack, "lower")
    ug, lg = abs(pmax - up.bound), abs(pmin - lo.bound)
    return DualityGapReport(pmax, pmin, up.bound, lo.bound, ug, lg, ug <= tol and lg <= tol, up, lo)


def fooling_gap(f, domain, sigma, slack) -> float:
    """Worst-case ``|E_{D'}[f] - E_D[f]|`` over the moment window, by LP."""
    base = domain.expectation(_values(f, domain))
    pmax = solve_primal(f, domain, sigma, slack, "max").objective
    pmin = solve_primal(f, domain, sigma, slack, "min").objective
    return max(abs(pmax - base), abs(pmin - base))


@dataclass(frozen=True)
class SandwichReport:
    passed: bool
    pointwise_ok: bool
    upper_gap: float
    lower_gap: float
    bound: float
    min_upper_margin: float
    min_lower_margin: float
    in_window: bool | None = None


def verify_sandwich(p_l: Polynomial, p_u: Polynomial, f, dist, eps: float,
                    slack: SlackSchedule | None = None, reference: MomentVector | None = None,
                    tol: float = 1e-8) -> SandwichReport:
    """Check ``p_l <= f <= p_u`` on the support of ``dist`` and both expected gaps ``<= 2 eps``.

    ``dist`` is a ``DiscreteDistribution`` or an ``UnlabeledSample``.  When
    ``slack`` and ``reference`` are given, also report whether ``dist``
    matches the reference moments within the slack.
    """
    if isinstance(dist, UnlabeledSample):
        points, weights = dist.points, dist.weights()
    else:
        points, weights = dist.points, dist.weights
    fv = np.asarray(f.evaluate(points) if hasattr(f, "evaluate") else f(points), dtype=np.float64)
    up = p_u.evaluate_many(points) - fv
    lo = fv - p_l.evaluate_many(points)
    pointwise = bool(up.min() >= -tol and lo.min() >= -tol)
    ug, lg = float(weights @ up), float(weights @ lo)
    in_window = None
    if slack is not None and reference is not None:
        phi = monomial_features(points, reference.indices)
        emp = weights @ phi
        in_window = bool(np.all(np.abs(emp - reference.as_array()) <= slack.as_array() + 1e-9))
    passed = pointwise and ug <= 2 * eps + tol and lg <= 2 * eps + tol
    return SandwichReport(passed, pointwise, ug, lg, 2 * eps, float(up.min()), float(lo.min()), in_window)


# ----------------------------------------------------------------------------
# lambda-distance


def characteristic_function(x, t, weights=None) -> np.ndarray:
    """``E[exp(i t x)]`` of a 1-D (weighted) sample at each ``t``, by direct summation."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    w = np.full(len(x), 1.0 / len(x)) if weights is None else np.asarray(weights, dtype=np.float64)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    return np.exp(1j * np.outer(t, x)) @ w


def _cf_on_progression(x, w, t0: float, h: float, n: int, chunk: int = 1 << 17) -> np.ndarray:
    """CF at ``t0 + j h`` for ``j < n``.

    Writes ``j = a r + b`` so the sum over the sample becomes a small complex
    matrix product of powers ``exp(i h r x)^a`` against ``w exp(i t0 x) exp(i h x)^b``.
    """
    r = max(1, math.isqrt(n - 1) + 1) if n > 1 else 1
    rows = -(-n // r)
    out = np.zeros((rows, r), dtype=np.complex128)
    for start in range(0, len(x), chunk):
        xc, wc = x[start:start + chunk], w[start:start + chunk]
        step = np.exp(1j * h * xc)
        B = np.empty((r, len(xc)), dtype=np.complex128)
        B[0] = wc * np.exp(1j * t0 * xc)
        for b in range(1, r):
            B[b] = B[b - 1] * step
        jump = np.exp(1j * h * r * xc)
        A = np.empty((rows, len(xc)), dtype=np.complex128)
        A[0] = 1.0
        for a in range(1, rows):
            A[a] = A[a - 1] * jump
        out += A @ B.T
    return out.reshape(-1)[:n]


def _cf_grid(x, w, T_grid, t_per_T) -> list[np.ndarray]:
    """CF on the non-negative half of each uniform grid ``linspace(-T, T, t_per_T)``.

    Real data have ``phi(-t) = conj(phi(t))``, so the modulus of a CF
    difference is symmetric and the half grid carries the maximum.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    w = np.full(len(x), 1.0 / len(x)) if w is None else np.asarray(w, dtype=np.float64).reshape(-1)
    out = []
    for T in T_grid:
        if t_per_T == 1:
            out.append(_cf_on_progression(x, w, 0.0, 0.0, 1))
            continue
        h = 2 * T / (t_per_T - 1)
        first = t_per_T // 2  # index of the first grid point >= 0
        t0 = -T + first * h
        out.append(_cf_on_progression(x, w, t0, h, t_per_T - first))
    return out


@dataclass(frozen=True)
class LambdaProfile:
    value: float
    T_grid: np.ndarray
    sup_gaps: np.ndarray
    best_T: float


def lambda_profile_from_cf(cf_p, cf_q, T_grid) -> LambdaProfile:
    T_grid = np.asarray(T_grid, dtype=np.float64)
    gaps = np.array([np.max(np.abs(a - b)) for a, b in zip(cf_p, cf_q)])
    values = np.maximum(gaps, 1.0 / T_grid)
    best = int(np.argmin(values))
    return LambdaProfile(float(values[best]), T_grid, gaps, float(T_grid[best]))


def lambda_distance(P_sample, Q_sample, T_grid=DEFAULT_T_GRID, t_per_T: int = DEFAULT_T_PER_T,
                    P_weights=None, Q_weights=None) -> float:
    """Grid-restricted ``min_T max(sup_{|t| <= T} |phi_P(t) - phi_Q(t)|, 1/T)``.

    The sup runs over ``t_per_T`` equally spaced points in ``[-T, T]`` and the
    min over ``T_grid``, so the result is an upper-biased estimate of the
    continuum quantity.  Optional weights turn either sample into a discrete
    distribution.
    """
    return lambda_profile(P_sample, Q_sample, T_grid, t_per_T, P_weights, Q_weights).value


def lambda_profile(P_sample, Q_sample, T_grid=DEFAULT_T_GRID, t_per_T: int = DEFAULT_T_PER_T,
                   P_weights=None, Q_weights=None) -> LambdaProfile:
    T_grid = np.asarray(T_grid, dtype=np.float64)
    if np.any(np.diff(T_grid) < 0) or np.any(T_grid <= 0):
        raise ValueError("T_grid must be positive and ascending")
    P = np.asarray(P_sample, dtype=np.float64).reshape(-1)
    Q = np.asarray(Q_sample, dtype=np.float64).reshape(-1)
    if P.size == 0 or Q.size == 0:
        raise ValueError("samples must be non-empty")
    cf_p = _cf_grid(P, P_weights, T_grid, t_per_T)
    cf_q = cf_p if (Q_sample is P_sample and Q_weights is P_weights) else _cf_grid(Q, Q_weights, T_grid, t_per_T)
    return lambda_profile_from_cf(cf_p, cf_q, T_grid)
