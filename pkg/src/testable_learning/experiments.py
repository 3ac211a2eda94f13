"""Named benchmark presets: seeded experiments with explicit pass/fail thresholds.

Each preset returns an ``ExperimentResult`` whose ``summary`` is JSON-ready.
Seed sweeps can be spread over processes with ``jobs``; results come back in
seed order so the reduction is deterministic.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import DiscreteDistribution, SlackSchedule, UnlabeledSample
from .distributions import (
    Halfspace,
    LabeledSource,
    constant,
    cube_points,
    draw_labeled,
    gaussian,
    grid_halfspaces,
    hypercube,
    majority,
    parities,
    rng_for,
    sample,
    sample_histogram,
)
from .duality import (
    DEFAULT_T_GRID,
    DEFAULT_T_PER_T,
    _cf_grid,
    cube_domain,
    gaussian_grid_domain,
    lambda_profile_from_cf,
    random_primal_feasible,
    solve_primal,
    strong_duality_check,
    verify_sandwich,
)
from .learner import testable_learn
from .moments import SubexpScheduleParams, hypercube_slack, subexp_slack
from .rademacher import Memorizer, TesterConfig, fooling_experiment, rademacher_tester_learner
from .tester import almost_kwise_tv, anticoncentration_certify, max_bias, moment_test


@dataclass
class ExperimentResult:
    name: str
    passed: bool
    summary: dict
    elapsed: float = 0.0
    details: list = field(default_factory=list)


def _map(fn, items, jobs: int = 1):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _timed(fn):
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.elapsed = time.perf_counter() - t0
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# ----------------------------------------------------------------------------
# 1: hypercube completeness


def _cube_trial(args):
    d, k, eps, m, seed = args
    target = hypercube(d)
    rep = moment_test(sample_histogram(target, m, seed), target, k, hypercube_slack(eps, d, k))
    return rep.accepted, rep.max_violation_ratio


@_timed
def cube_completeness(d: int = 8, k: int = 2, eps: float = 0.2, m: int | None = None, trials: int = 100,
                      required: int = 98, seed: int = 0, jobs: int = 1) -> ExperimentResult:
    """Acceptance rate of the hypercube tester on genuine uniform samples.

    ``m`` defaults to ``4 d^{2k} / eps^2``.
    """
    if m is None:
        m = int(round(4 * d ** (2 * k) / eps**2))
    out = _map(_cube_trial, [(d, k, eps, m, seed + t) for t in range(trials)], jobs)
    accepted = sum(a for a, _ in out)
    delta = eps * d ** (-k) / 4
    summary = {"d": d, "k": k, "eps": eps, "delta": delta, "m": m, "delta_sqrt_m": delta * math.sqrt(m),
               "trials": trials, "accepted": accepted, "required": required,
               "median_max_ratio": float(np.median([r for _, r in out]))}
    return ExperimentResult("cube_completeness", accepted >= required, summary)


# ----------------------------------------------------------------------------
# 2: soundness gate


def _point_mass_cube(d, m, seed):
    v = 2.0 * rng_for(seed, 3).integers(0, 2, size=d) - 1.0
    return UnlabeledSample(v[None, :], [m])


def _point_mass_gauss(d, m, seed):
    v = rng_for(seed, 3).standard_normal(d)
    return UnlabeledSample(v[None, :], [m])


def _uniform_box(d, m, seed):
    return UnlabeledSample(rng_for(seed, 4).uniform(-1.0, 1.0, size=(m, d)))


@_timed
def soundness_gate(trials: int = 100, cube_d: int = 8, cube_k: int = 2, eps: float = 0.2,
                   gauss_d: int = 2, gauss_k: int = 4, gauss_m: int = 100_000, seed: int = 0) -> ExperimentResult:
    """Rejection counts for point masses and the uniform box against the cube and Gaussian testers."""
    cube = hypercube(cube_d)
    cube_slack = hypercube_slack(eps, cube_d, cube_k)
    cube_m = int(round(4 * cube_d ** (2 * cube_k) / eps**2))
    g = gaussian(gauss_d)
    g_slack = subexp_slack(SubexpScheduleParams(k=gauss_k, d=gauss_d))
    rejected = {"point_mass_vs_cube": 0, "point_mass_vs_gaussian": 0, "uniform_box_vs_gaussian": 0}
    for t in range(trials):
        s = seed + t
        rejected["point_mass_vs_cube"] += not moment_test(_point_mass_cube(cube_d, cube_m, s), cube, cube_k,
                                                          cube_slack).accepted
        rejected["point_mass_vs_gaussian"] += not moment_test(_point_mass_gauss(gauss_d, gauss_m, s), g, gauss_k,
                                                              g_slack).accepted
        rejected["uniform_box_vs_gaussian"] += not moment_test(_uniform_box(gauss_d, gauss_m, s), g, gauss_k,
                                                               g_slack).accepted
    summary = {"trials": trials, "rejected": rejected, "cube_m": cube_m, "gaussian_m": gauss_m}
    return ExperimentResult("soundness_gate", all(v == trials for v in rejected.values()), summary)


# ----------------------------------------------------------------------------
# 3: end-to-end learning


def _e2e_trial(args):
    seed, m, heldout, noise, k = args
    target = gaussian(2)
    rng = rng_for(seed, 11)
    angle = rng.uniform(0, 2 * np.pi)
    teacher = Halfspace(np.array([np.cos(angle), np.sin(angle)]), rng.uniform(-0.5, 0.5))
    src = LabeledSource(target, teacher, noise)
    train = draw_labeled(src, m, seed, stream=0)
    res = testable_learn(train, target, k, subexp_slack(SubexpScheduleParams(k=k, d=2)))
    if not res.accepted:
        return False, None
    test = draw_labeled(src, heldout, seed, stream=20)
    return True, float(np.mean(res.hypothesis.predict(test.points) != test.labels))


@_timed
def end_to_end(seeds: int = 50, m: int = 20_000, heldout: int = 100_000, noise: float = 0.1, k: int = 4,
               eps: float = 0.1, seed: int = 0, jobs: int = 1) -> ExperimentResult:
    out = _map(_e2e_trial, [(seed + s, m, heldout, noise, k) for s in range(seeds)], jobs)
    errs = [e for a, e in out if a]
    good = sum(e <= noise + eps for e in errs)
    accepted = len(errs)
    passed = accepted >= math.ceil(0.9 * seeds) and good >= 0.9 * accepted
    summary = {"seeds": seeds, "m": m, "heldout": heldout, "accepted": accepted, "within_bound": good,
               "bound": noise + eps, "mean_error": float(np.mean(errs)) if errs else None,
               "max_error": float(np.max(errs)) if errs else None}
    return ExperimentResult("end_to_end", passed, summary)


# ----------------------------------------------------------------------------
# 4: strong duality sweep


def _duality_instance(i: int, rng: np.random.Generator):
    d = int(rng.integers(2, 5))
    k = int(rng.integers(1, 3))
    family = ("parity", "majority", "halfspace")[i % 3]
    if family == "parity":
        ps = parities(d)[1:]
        f = ps[int(rng.integers(len(ps)))]
    elif family == "majority":
        f = majority(d)
    else:
        hs = grid_halfspaces(d, 1)
        f = hs[int(rng.integers(len(hs)))]
    delta = float(rng.choice([0.05, 0.1]))
    return d, k, f, delta


@_timed
def duality_sweep(instances: int = 30, feasible_draws: int = 20, seed: int = 0) -> ExperimentResult:
    rng = rng_for(seed, 30)
    rows = []
    for i in range(instances):
        d, k, f, delta = _duality_instance(i, rng)
        dom = cube_domain(d)
        sigma = dom.moments(k, multilinear=True)
        slack = SlackSchedule.uniform(delta, k, d, multilinear=True)
        rep = strong_duality_check(f, dom, sigma, slack)
        base = dom.expectation(f.evaluate(dom.points))
        eps = max(rep.dual_upper - base, base - rep.dual_lower, 0.0)
        sandwich_ok = 0
        for _ in range(feasible_draws):
            Dp = random_primal_feasible(dom, sigma, slack, rng)
            sw = verify_sandwich(rep.lower.polynomial, rep.upper.polynomial, f, Dp, eps, slack, sigma)
            sandwich_ok += sw.passed and bool(sw.in_window)
        rows.append({"d": d, "k": k, "f": repr(f), "delta": delta, "upper_gap": rep.upper_gap,
                     "lower_gap": rep.lower_gap, "eps": eps, "sandwich_passed": sandwich_ok})
    gap_ok = all(r["upper_gap"] <= 1e-5 and r["lower_gap"] <= 1e-5 for r in rows)
    sw_ok = all(r["sandwich_passed"] == feasible_draws for r in rows)
    summary = {"instances": instances, "max_gap": max(max(r["upper_gap"], r["lower_gap"]) for r in rows),
               "all_gaps_ok": gap_ok, "all_sandwiches_ok": sw_ok}
    return ExperimentResult("duality_sweep", gap_ok and sw_ok, summary, details=rows)


# ----------------------------------------------------------------------------
# 5: almost k-wise independence


@_timed
def almost_kwise(instances: int = 50, seed: int = 0) -> ExperimentResult:
    rng = rng_for(seed, 50)
    rows = []
    for _ in range(instances):
        d = int(rng.integers(3, 6))
        k = int(rng.integers(1, 3))
        N = 2**d
        t = rng.uniform(0.0, 0.5)
        w = (1 - t) / N + t * rng.dirichlet(np.ones(N))
        dist = DiscreteDistribution(cube_points(d), w / w.sum())
        tv, _ = almost_kwise_tv(dist, k)
        delta = max_bias(dist, k)
        rows.append({"d": d, "k": k, "tv": tv, "delta": delta, "bound": delta * d**k})
    hand = DiscreteDistribution(np.array([[1.0, 1.0], [-1.0, -1.0]]), np.array([0.5, 0.5]))
    hand_tv, _ = almost_kwise_tv(hand, 2)
    bound_ok = all(r["tv"] <= r["bound"] + 1e-9 for r in rows)
    hand_ok = abs(hand_tv - 0.5) <= 1e-9
    summary = {"instances": instances, "all_within_bound": bound_ok, "hand_tv": hand_tv,
               "max_tv_over_bound": max(r["tv"] / r["bound"] for r in rows)}
    return ExperimentResult("almost_kwise", bound_ok and hand_ok, summary, details=rows)


# ----------------------------------------------------------------------------
# 6: Rademacher tester-learner


@_timed
def rademacher_constants(seeds: int = 20, m: int = 10_000, eps: float = 0.2, noise: float = 0.1,
                         sigma_draws: int = 2000, seed: int = 0) -> ExperimentResult:
    rows = []
    for s in range(seeds):
        src = LabeledSource(gaussian(2), constant(1, 2), noise)
        train = draw_labeled(src, m, seed + s)
        dec = rademacher_tester_learner([constant(1, 2), constant(-1, 2)], train, eps, sigma_draws, seed + s)
        minority = min(np.mean(train.labels == 1), np.mean(train.labels == -1))
        rows.append({"accepted": dec.accepted, "estimate": dec.estimate.mean, "upper": dec.upper,
                     "erm_error": dec.training_error, "minority_rate": float(minority)})
    ok = sum(r["accepted"] and abs(r["erm_error"] - r["minority_rate"]) <= 0.01 for r in rows)
    summary = {"seeds": seeds, "m": m, "eps": eps, "passed_seeds": ok,
               "mean_estimate": float(np.mean([r["estimate"] for r in rows])),
               "oracle": math.sqrt(2 / (math.pi * m))}
    return ExperimentResult("rademacher_constants", ok == seeds, summary, details=rows)


# ----------------------------------------------------------------------------
# 7: fooling lower bound


def _fooling_trial(args):
    M, m, k, seed = args
    target = gaussian(2)
    cfg = TesterConfig(k, subexp_slack(SubexpScheduleParams(k=k, d=2)))
    return fooling_experiment(target, M, m, cfg, Memorizer(), seed)


def fooling_reports(M: int = 10_000, m: int = 50, seeds: int = 20, k: int = 2, seed: int = 0, jobs: int = 1):
    return _map(_fooling_trial, [(M, m, k, seed + s) for s in range(seeds)], jobs)


def summarize_fooling(reports) -> dict:
    return {
        "seeds": len(reports),
        "mean_opt": float(np.mean([r.opt_on_D for r in reports])),
        "max_opt": float(np.max([r.opt_on_D for r in reports])),
        "accepted": int(sum(r.tester_accepted for r in reports)),
        "mean_heldout_error": float(np.mean([r.learner_heldout_error for r in reports])),
        "min_heldout_error": float(np.min([r.learner_heldout_error for r in reports])),
        "duplicates_found": int(sum(r.duplicates_found for r in reports)),
        "regime_ok": bool(all(r.regime_ok for r in reports)),
    }


@_timed
def fooling_lower_bound(M: int = 10_000, m: int = 50, seeds: int = 20, k: int = 2, seed: int = 0,
                        jobs: int = 1) -> ExperimentResult:
    reps = fooling_reports(M, m, seeds, k, seed, jobs)
    s = summarize_fooling(reps)
    s.update({"M": M, "m": m, "k": k})
    passed = s["max_opt"] == 0 and s["accepted"] >= seeds - seeds // 20 and s["mean_heldout_error"] >= 0.45
    return ExperimentResult("fooling_lower_bound", passed, s)


# ----------------------------------------------------------------------------
# 8: lambda-distance trend


def _threshold_at(c):
    return lambda x: np.where(x[:, 0] >= c, 1.0, -1.0)


@_timed
def lambda_trend(ks=(2, 4, 6, 8), reference_size: int = 1_000_000, grid_points: int = 801,
                 half_width: float = 8.0, cut: float = 0.5, T_grid=DEFAULT_T_GRID,
                 t_per_T: int = DEFAULT_T_PER_T, seed: int = 0) -> ExperimentResult:
    """Moment-matched grid distributions (extremal for ``sgn(x - cut)``) against a Gaussian reference.

    The Monte Carlo standard error of the estimate is taken as
    ``1/sqrt(reference_size)``: every ``|phi_ref(t) - phi(t)|`` is an average of
    terms bounded by 2, so the min-max statistic moves by at most the sup of
    the empirical-process deviation, which is of that order.
    """
    T = np.asarray(T_grid, dtype=np.float64)
    dom = gaussian_grid_domain(grid_points, half_width)
    ref = rng_for(seed, 80).standard_normal(reference_size)
    cf_ref = _cf_grid(ref, None, T, t_per_T)
    se = 1.0 / math.sqrt(reference_size)
    rows = []
    f = _threshold_at(cut)
    for k in ks:
        sigma = dom.moments(k)
        slack = subexp_slack(SubexpScheduleParams(k=k, d=1))
        P = solve_primal(f, dom, sigma, slack, "max")
        prof = lambda_profile_from_cf(_cf_grid(dom.points[:, 0], P.weights, T, t_per_T), cf_ref, T)
        rows.append({"k": k, "lambda": prof.value, "best_T": prof.best_T, "primal_objective": P.objective})
    vals = [r["lambda"] for r in rows]
    monotone = all(b <= a + 2 * se for a, b in zip(vals, vals[1:]))
    summary = {"ks": list(ks), "lambda": vals, "std_error": se, "non_increasing": monotone,
               "grid_restricted": True}
    return ExperimentResult("lambda_trend", monotone, summary, details=rows)


# ----------------------------------------------------------------------------
# 9: anticoncentration


def unit_directions(n: int) -> np.ndarray:
    a = np.arange(n) * np.pi / n
    return np.stack([np.cos(a), np.sin(a)], axis=1)


DEFAULT_INTERVALS = ((-0.05, 0.05), (0.0, 0.1), (0.3, 0.5), (-1.2, -0.7), (1.5, 2.5))


@_timed
def anticoncentration(runs: int = 10, m: int = 100_000, k: int = 4, eps: float = 0.05, n_dirs: int = 20,
                      intervals=DEFAULT_INTERVALS, seed: int = 0) -> ExperimentResult:
    g = gaussian(2)
    params = SubexpScheduleParams(k=k, d=2)
    dirs = unit_directions(n_dirs)
    gauss_rows, box_rows = [], []
    for r in range(runs):
        rep = anticoncentration_certify(sample(g, m, seed + r), g, params, eps, dirs, intervals)
        gauss_rows.append({"certified": rep.certified, "all_passed": rep.all_passed,
                           "failed": sum(not e.passed for e in rep.entries)})
        box = anticoncentration_certify(_uniform_box(2, m, seed + r), g, params, eps, dirs, intervals)
        box_rows.append({"certified": box.certified})
    certified = [row for row in gauss_rows if row["certified"]]
    gauss_ok = bool(certified) and all(row["all_passed"] for row in certified)
    box_ok = not any(row["certified"] for row in box_rows)
    summary = {"runs": runs, "m": m, "certified_gaussian_runs": len(certified),
               "certified_runs_all_pass": gauss_ok, "box_certified": sum(r["certified"] for r in box_rows),
               "checks_per_run": n_dirs * len(intervals)}
    return ExperimentResult("anticoncentration", gauss_ok and box_ok, summary)


PRESETS = {
    "completeness": cube_completeness,
    "soundness": soundness_gate,
    "end-to-end": end_to_end,
    "duality": duality_sweep,
    "almost-kwise": almost_kwise,
    "rademacher": rademacher_constants,
    "fooling": fooling_lower_bound,
    "lambda": lambda_trend,
    "anticoncentration": anticoncentration,
}

PARALLEL = {"completeness", "end-to-end", "fooling"}
