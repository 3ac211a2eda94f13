"""Command-line interface: ``tl <command> ...``.

Exit codes: 0 success or accept, 1 tester reject (or a failed bench preset),
2 I/O or malformed input, 3 resource cap exceeded, 64 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import experiments
from .core import LabeledSample, SlackSchedule, UnlabeledSample
from .distributions import (
    Concept,
    Parity,
    constant,
    constants,
    draw_labeled,
    grid_halfspaces,
    LabeledSource,
    majority,
    parities,
    parse_target,
)
from .duality import cube_domain, gaussian_grid_domain, solve_primal, strong_duality_check
from .errors import DomainTooLargeError, ProblemTooLargeError, TLError
from .learner import DEFAULT_FEATURE_CAP, testable_learn
from .moments import SubexpScheduleParams, empirical_moments, hypercube_slack, subexp_slack
from .rademacher import DEFAULT_SIGMA_DRAWS, empirical_rademacher, rademacher_tester_learner
from .serialization import (
    SCHEMA,
    duality_certificate,
    dumps,
    hypothesis_from_dict,
    hypothesis_to_dict,
    loads,
    moment_vector_to_dict,
    slack_from_dict,
    tester_report_to_dict,
    to_jsonable,
)
from .tester import moment_test

EXIT_OK, EXIT_REJECT, EXIT_IO, EXIT_CAP, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------------------
# I/O helpers


def read_csv(path: str, header: bool = False) -> np.ndarray:
    try:
        with open(path) as fh:
            data = np.loadtxt(fh, delimiter=",", ndmin=2, skiprows=1 if header else 0, dtype=np.float64)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InputError(f"malformed CSV {path}: {exc}") from None
    if data.size == 0:
        raise InputError(f"{path} contains no rows")
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path} contains non-finite values")
    return data


def read_labeled(path: str, header: bool = False) -> LabeledSample:
    data = read_csv(path, header)
    if data.shape[1] < 2:
        raise InputError("labeled CSV needs at least one feature column and a label column")
    labels = data[:, -1]
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise InputError("labels (last column) must be -1 or 1")
    return LabeledSample(data[:, :-1], labels.astype(np.int64))


def emit(doc, out: str | None) -> None:
    text = dumps(doc) + "\n"
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(text)


def _report(kind: str, **fields) -> dict:
    return {"schema": SCHEMA, "type": kind, **to_jsonable(fields)}


# ----------------------------------------------------------------------------
# argument-string parsers


def parse_target_arg(text: str):
    try:
        return parse_target(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _floats(text: str, n_min: int, n_max: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")] if text else []
    except ValueError:
        raise UsageError(f"bad {what} parameters {text!r}") from None
    if not n_min <= len(vals) <= n_max:
        raise UsageError(f"{what} takes {n_min}..{n_max} comma-separated numbers")
    return vals


def parse_slack(text: str, k: int, d: int) -> SlackSchedule:
    """``hypercube:eps``, ``subexp:p,alpha,C2``, ``uniform:delta`` or ``file:path``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "hypercube":
            (eps,) = _floats(rest, 1, 1, "hypercube slack")
            return hypercube_slack(eps, d, k)
        if kind == "subexp":
            vals = _floats(rest, 0, 3, "subexp slack")
            p, alpha, C2 = (vals + [1.0, 1.0, 1.0][len(vals):])[:3]
            if p != int(p):
                raise UsageError("subexp p must be an integer")
            return subexp_slack(SubexpScheduleParams(k=k, d=d, p=int(p), alpha=alpha, C2=C2))
        if kind == "uniform":
            (delta,) = _floats(rest, 1, 1, "uniform slack")
            return SlackSchedule.uniform(delta, k, d)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad slack {text!r}: {exc}") from None
    if kind == "file":
        try:
            with open(rest) as fh:
                sched = slack_from_dict(loads(fh.read()))
        except OSError as exc:
            raise InputError(f"cannot read {rest}: {exc.strerror or exc}") from None
        except (ValueError, KeyError) as exc:
            raise InputError(f"malformed slack file {rest}: {exc}") from None
        if sched.degree_bound != k or sched.dimension != d:
            raise UsageError(f"slack file is for k={sched.degree_bound}, d={sched.dimension}")
        return sched
    raise UsageError(f"unknown slack {text!r}; expected hypercube:, subexp:, uniform: or file:")


def parse_domain(text: str):
    kind, _, rest = text.partition(":")
    try:
        if kind in ("cube", "hypercube"):
            return cube_domain(int(rest)), True
        if kind == "grid":
            vals = _floats(rest, 0, 2, "grid domain")
            n, hw = (vals + [801, 8.0][len(vals):])[:2]
            return gaussian_grid_domain(int(n), hw), False
    except ValueError as exc:
        if isinstance(exc, DomainTooLargeError):
            raise
        raise UsageError(f"bad domain {text!r}") from None
    raise UsageError(f"unknown domain {text!r}; expected cube:d or grid:n,halfwidth")


def parse_concept(text: str, d: int) -> Concept:
    """``majority``, ``constant:+1``, ``parity:0,2`` or ``halfspace-grid:index[,radius]``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "majority":
            return majority(d)
        if kind == "constant":
            return constant(int(rest or 1), d)
        if kind == "parity":
            return Parity(tuple(int(v) for v in rest.split(",")) if rest else (), d)
        if kind == "halfspace-grid":
            vals = [int(v) for v in rest.split(",")]
            radius = vals[1] if len(vals) > 1 else 1
            return grid_halfspaces(d, radius)[vals[0]]
    except (ValueError, IndexError) as exc:
        raise UsageError(f"bad concept {text!r}: {exc}") from None
    raise UsageError(f"unknown concept {text!r}")


def parse_class(text: str, d: int) -> list[Concept]:
    kind, _, rest = text.partition(":")
    if kind == "constants":
        return constants(d)
    if kind == "parities":
        return parities(d)
    if kind == "halfspace-grid":
        try:
            return grid_halfspaces(d, int(rest or 1))
        except ValueError:
            raise UsageError(f"bad class {text!r}") from None
    raise UsageError(f"unknown class {text!r}; expected constants, parities or halfspace-grid[:r]")


# ----------------------------------------------------------------------------
# commands


def cmd_moments(args) -> int:
    pts = read_csv(args.input, args.header)
    mv = empirical_moments(UnlabeledSample(pts), args.degree, args.multilinear)
    emit(moment_vector_to_dict(mv), args.out)
    return EXIT_OK


def cmd_test(args) -> int:
    target = parse_target_arg(args.target)
    slack = parse_slack(args.slack, args.degree, target.dimension)
    pts = read_csv(args.input, args.header)
    if pts.shape[1] != target.dimension:
        raise InputError(f"data has {pts.shape[1]} columns but the target has dimension {target.dimension}")
    rep = moment_test(UnlabeledSample(pts), target, args.degree, slack)
    emit(tester_report_to_dict(rep), args.out)
    return EXIT_OK if rep.accepted else EXIT_REJECT


def cmd_learn(args) -> int:
    target = parse_target_arg(args.target)
    slack = parse_slack(args.slack, args.degree, target.dimension)
    data = read_labeled(args.input, args.header)
    if data.dimension != target.dimension:
        raise InputError(f"data has {data.dimension} feature columns but the target has dimension {target.dimension}")
    res = testable_learn(data, target, args.degree, slack, feature_cap=args.feature_cap)
    if res.accepted and args.model:
        emit(hypothesis_to_dict(res.hypothesis), args.model)
    report = _report("learn_report", accepted=res.accepted, tester=tester_report_to_dict(res.report),
                     training_l1=res.training_l1,
                     threshold=None if res.hypothesis is None else res.hypothesis.threshold)
    emit(report, args.out)
    return EXIT_OK if res.accepted else EXIT_REJECT


def cmd_predict(args) -> int:
    try:
        with open(args.model) as fh:
            h = hypothesis_from_dict(loads(fh.read()))
    except OSError as exc:
        raise InputError(f"cannot read {args.model}: {exc.strerror or exc}") from None
    except (ValueError, KeyError) as exc:
        raise InputError(f"malformed model {args.model}: {exc}") from None
    pts = read_csv(args.input, args.header)
    if args.labeled:
        pts = pts[:, :-1]
    if pts.shape[1] != h.polynomial.dimension:
        raise InputError(f"model expects {h.polynomial.dimension} columns, got {pts.shape[1]}")
    text = "".join(f"{int(v)}\n" for v in h.predict(pts))
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise InputError(f"cannot write {args.out}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_duality(args) -> int:
    dom, is_cube = parse_domain(args.domain)
    f = parse_concept(args.concept, dom.dimension)
    sigma = dom.moments(args.degree, multilinear=is_cube)
    slack = parse_slack(args.slack, args.degree, dom.dimension)
    if is_cube and not slack.multilinear:
        # only square-free monomials are informative on the cube
        slack = SlackSchedule(slack.degree_bound, slack.dimension, {I: slack.entries[I] for I in sigma.indices},
                              True, slack.provenance, slack.params)
    elif slack.multilinear and not is_cube:
        raise UsageError("a multilinear slack schedule needs a cube domain")
    rep = strong_duality_check(f, dom, sigma, slack)
    base = dom.expectation(f.evaluate(dom.points))
    pmax = solve_primal(f, dom, sigma, slack, "max")
    doc = _report(
        "duality_report", concept=f, degree=args.degree, domain=args.domain,
        primal_max=rep.primal_max, primal_min=rep.primal_min, dual_upper=rep.dual_upper,
        dual_lower=rep.dual_lower, upper_gap=rep.upper_gap, lower_gap=rep.lower_gap,
        gap=max(rep.upper_gap, rep.lower_gap), passed=rep.passed, base_expectation=base,
        fooling_gap=max(abs(rep.primal_max - base), abs(rep.primal_min - base)),
        certificate=duality_certificate(pmax, rep.upper, rep.upper_gap),
    )
    emit(doc, args.out)
    return EXIT_OK


def cmd_rademacher(args) -> int:
    if args.input:
        data = read_labeled(args.input, args.header)
    else:
        target = parse_target_arg(args.target)
        src = LabeledSource(target, constant(1, target.dimension), args.noise)
        data = draw_labeled(src, args.m, args.seed)
    concepts = parse_class(args.cls, data.dimension)
    if args.eps is None:
        est = empirical_rademacher(concepts, data.marginal(), args.sigma_draws, args.seed)
        emit(_report("rademacher_estimate", **{k: getattr(est, k) for k in
                                               ("mean", "std_error", "sigma_draws", "sample_size", "exact")}),
             args.out)
        return EXIT_OK
    dec = rademacher_tester_learner(concepts, data, args.eps, args.sigma_draws, args.seed)
    emit(_report("rademacher_decision", accepted=dec.accepted, mean=dec.estimate.mean,
                 std_error=dec.estimate.std_error, upper=dec.upper, concept=dec.concept,
                 training_error=dec.training_error), args.out)
    return EXIT_OK if dec.accepted else EXIT_REJECT


def cmd_adversary(args) -> int:
    target = parse_target_arg(args.target)
    cfg_k = args.degree
    reports = [
        _adversary_one(target, args.M, args.m, cfg_k, args.seed + s)
        for s in range(args.seeds)
    ] if args.jobs <= 1 else experiments._map(
        _adversary_star, [(args.target, args.M, args.m, cfg_k, args.seed + s) for s in range(args.seeds)], args.jobs)
    summary = experiments.summarize_fooling(reports)
    emit(_report("adversary_report", M=args.M, m=args.m, degree=cfg_k, target=args.target,
                 summary=summary, runs=reports), args.out)
    return EXIT_OK


def _adversary_one(target, M, m, k, seed):
    from .rademacher import Memorizer, TesterConfig, fooling_experiment

    slack = subexp_slack(SubexpScheduleParams(k=k, d=target.dimension))
    return fooling_experiment(target, M, m, TesterConfig(k, slack), Memorizer(), seed)


def _adversary_star(args):
    text, M, m, k, seed = args
    return _adversary_one(parse_target(text), M, m, k, seed)


def cmd_bench(args) -> int:
    if args.list:
        for name in experiments.PRESETS:
            sys.stdout.write(f"{name}\n")
        return EXIT_OK
    names = args.presets or list(experiments.PRESETS)
    unknown = [n for n in names if n not in experiments.PRESETS]
    if unknown:
        raise UsageError(f"unknown preset(s) {', '.join(unknown)}; see `bench --list`")
    results = []
    for name in names:
        kwargs = {"seed": args.seed}
        if name in experiments.PARALLEL:
            kwargs["jobs"] = args.jobs
        res = experiments.PRESETS[name](**kwargs)
        results.append({"preset": name, "passed": res.passed, "summary": res.summary})
        sys.stderr.write(f"{name}: {'PASS' if res.passed else 'FAIL'}\n")
    emit(_report("bench_report", results=results), args.out)
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_REJECT


# ----------------------------------------------------------------------------
# parser


def _default_seed() -> int:
    env = os.environ.get("TL_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"TL_SEED must be an integer, got {env!r}") from None


def build_parser(default_seed: int = 0) -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=default_seed, help="base seed (default: $TL_SEED or 0)")
    common.add_argument("--jobs", type=int, default=1, help="processes for seed sweeps")
    common.add_argument("--out", help="write the JSON report here instead of stdout")

    p = _Parser(prog="tl", description="Testable learning via moment matching.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("moments", parents=[common], help="empirical moment vector of a CSV sample")
    s.add_argument("--input", required=True)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--multilinear", action="store_true")
    s.add_argument("--header", action="store_true")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("test", parents=[common], help="moment-matching test against a target")
    s.add_argument("--input", required=True)
    s.add_argument("--target", required=True, help="gaussian:d, hypercube:d or sphere:d")
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--slack", required=True, help="hypercube:eps | subexp:p,alpha,C2 | uniform:delta | file:path")
    s.add_argument("--header", action="store_true")
    s.set_defaults(func=cmd_test)

    s = sub.add_parser("learn", parents=[common], help="test then fit an L1 polynomial threshold")
    s.add_argument("--input", required=True, help="labeled CSV, labels in the last column")
    s.add_argument("--target", required=True)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--slack", required=True)
    s.add_argument("--model", help="where to write the model JSON on accept")
    s.add_argument("--feature-cap", type=int, default=DEFAULT_FEATURE_CAP)
    s.add_argument("--header", action="store_true")
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("predict", parents=[common], help="label a CSV with a saved model")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--labeled", action="store_true", help="input has a trailing label column to ignore")
    s.add_argument("--header", action="store_true")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("duality", parents=[common], help="primal/dual LPs and sandwiching certificate")
    s.add_argument("--domain", required=True, help="cube:d or grid:n,halfwidth")
    s.add_argument("--concept", required=True, help="majority | constant:+1 | parity:0,2 | halfspace-grid:i[,r]")
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--slack", required=True)
    s.set_defaults(func=cmd_duality)

    s = sub.add_parser("rademacher", parents=[common], help="empirical Rademacher complexity / tester-learner")
    s.add_argument("--class", dest="cls", required=True, help="constants | parities | halfspace-grid[:r]")
    s.add_argument("--input", help="labeled CSV; otherwise draw --m points from --target")
    s.add_argument("--target", default="gaussian:2")
    s.add_argument("--m", type=int, default=10_000)
    s.add_argument("--noise", type=float, default=0.1, help="label noise on a +1 teacher for drawn samples")
    s.add_argument("--eps", type=float, help="run the tester-learner at this accuracy")
    s.add_argument("--sigma-draws", type=int, default=DEFAULT_SIGMA_DRAWS, help="-1 for exhaustive")
    s.add_argument("--header", action="store_true")
    s.set_defaults(func=cmd_rademacher)

    s = sub.add_parser("adversary", parents=[common], help="random-label fooling experiment over seeds")
    s.add_argument("--target", default="gaussian:2")
    s.add_argument("--M", type=int, default=10_000)
    s.add_argument("--m", type=int, default=50)
    s.add_argument("--seeds", type=int, default=20)
    s.add_argument("--degree", type=int, default=2)
    s.set_defaults(func=cmd_adversary)

    s = sub.add_parser("bench", parents=[common], help="run named benchmark presets")
    s.add_argument("presets", nargs="*")
    s.add_argument("--list", action="store_true")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    try:
        seed = _default_seed()
        args = build_parser(seed).parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"tl: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    if getattr(args, "degree", 1) is not None and getattr(args, "degree", 1) < 0:
        sys.stderr.write("tl: error: --degree must be non-negative\n")
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"tl: error: {exc}\n")
        return EXIT_USAGE
    except (ProblemTooLargeError, DomainTooLargeError) as exc:
        sys.stderr.write(f"tl: resource cap: {exc}\n")
        return EXIT_CAP
    except (InputError, TLError, ValueError) as exc:
        sys.stderr.write(f"tl: error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
