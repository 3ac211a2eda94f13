"""Target marginals, concept classes and labeled data sources.

Randomness: every sampler takes an integer ``seed`` and an optional
``stream`` id; the pair is turned into an independent numpy substream via
``SeedSequence(seed, spawn_key=(stream,))``.  Same (seed, stream, n) gives
the same draw.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import special

from .core import (
    DiscreteDistribution,
    LabeledSample,
    MomentVector,
    MultiIndex,
    UnlabeledSample,
    index_set,
)
from .errors import DimensionError, EmptyClassError, NormalizationError


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))


def sgn(values) -> np.ndarray:
    """Sign with ``sgn(0) = +1``."""
    return np.where(np.asarray(values) >= 0, 1, -1)


# ----------------------------------------------------------------------------
# target marginals


@dataclass(frozen=True)
class DistributionProfile:
    """Tail exponent ``alpha`` and the tail / moment-growth / anticoncentration constants."""

    alpha: float = 1.0
    C1: float = 0.5
    C2: float = 1.0
    C3: float = 0.4

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        for name in ("C1", "C2", "C3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def gaussian_moment(I) -> float:
    """``E[x_I]`` for the standard Gaussian: product of ``(I_j - 1)!!`` when all exponents are even."""
    out = 1.0
    for e in I:
        if e % 2:
            return 0.0
        out *= float(special.factorial2(e - 1, exact=True)) if e > 0 else 1.0
    return out


def hypercube_moment(I) -> float:
    """``E[x_I]`` for the uniform distribution on ``{-1, +1}^d``."""
    return 0.0 if any(e % 2 for e in I) else 1.0


def sphere_moment(I) -> float:
    """``E[x_I]`` for the uniform distribution on the unit sphere in ``R^d``.

    Uses ``E[g_I] = E[r^|I|] E[x_I]`` for a standard Gaussian ``g = r x``.
    """
    if any(e % 2 for e in I):
        return 0.0
    d = len(I)
    half = sum(I) // 2
    radial = math.prod(d + 2 * i for i in range(half))
    return gaussian_moment(I) / radial


@dataclass(frozen=True)
class TargetDistribution:
    kind: str
    dimension: int
    moment_fn: Callable[[MultiIndex], float] = field(repr=False)
    sampler_fn: Callable[[int, np.random.Generator], np.ndarray] | None = field(repr=False, default=None)
    profile: DistributionProfile | None = None

    def moment(self, I) -> float:
        I = MultiIndex(I)
        if len(I) != self.dimension:
            raise DimensionError(f"index {I} does not have dimension {self.dimension}")
        return 1.0 if I.is_zero() else float(self.moment_fn(I))

    def moments(self, k: int, multilinear: bool = False) -> MomentVector:
        return MomentVector.from_oracle(self.moment, k, self.dimension, multilinear)

    @property
    def is_hypercube(self) -> bool:
        return self.kind == "hypercube"

    @property
    def is_continuous(self) -> bool:
        return self.kind in ("gaussian", "sphere")

    def sample(self, n: int, seed: int, stream: int = 0) -> UnlabeledSample:
        return sample(self, n, seed, stream)

    def describe(self) -> str:
        return f"{self.kind}:{self.dimension}"


def gaussian(d: int, profile: DistributionProfile | None = None) -> TargetDistribution:
    return TargetDistribution(
        "gaussian", d, gaussian_moment,
        lambda n, rng: rng.standard_normal((n, d)),
        profile or DistributionProfile(),
    )


def hypercube(d: int) -> TargetDistribution:
    return TargetDistribution(
        "hypercube", d, hypercube_moment,
        lambda n, rng: (2 * rng.integers(0, 2, size=(n, d), dtype=np.int8) - 1).astype(np.float64),
        None,
    )


def _sphere_sampler(d):
    def draw(n, rng):
        g = rng.standard_normal((n, d))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    return draw


def sphere(d: int, profile: DistributionProfile | None = None) -> TargetDistribution:
    if d < 2:
        raise ValueError("the sphere target needs d >= 2")
    if profile is None:
        # peak of the density of <x, u> on S^{d-1}
        peak = math.exp(math.lgamma(d / 2) - math.lgamma((d - 1) / 2)) / math.sqrt(math.pi)
        profile = DistributionProfile(alpha=1.0, C1=0.5, C2=1.0, C3=peak)
    return TargetDistribution("sphere", d, sphere_moment, _sphere_sampler(d), profile)


def custom(d: int, moment_fn, sampler_fn=None, profile=None) -> TargetDistribution:
    return TargetDistribution("custom", d, moment_fn, sampler_fn, profile)


def parse_target(text: str) -> TargetDistribution:
    """Parse ``gaussian:d``, ``hypercube:d`` or ``sphere:d``."""
    name, _, dim = text.partition(":")
    try:
        d = int(dim)
    except ValueError:
        raise ValueError(f"bad target {text!r}; expected e.g. gaussian:2") from None
    factories = {"gaussian": gaussian, "hypercube": hypercube, "cube": hypercube, "sphere": sphere}
    if name not in factories or d < 1:
        raise ValueError(f"unknown target {text!r}")
    return factories[name](d)


def sample(target: TargetDistribution, n: int, seed: int, stream: int = 0) -> UnlabeledSample:
    """Draw ``n`` i.i.d. points from ``target``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if target.sampler_fn is None:
        raise ValueError(f"target {target.kind} has no sampler")
    pts = np.asarray(target.sampler_fn(n, rng_for(seed, stream)), dtype=np.float64)
    return UnlabeledSample(pts)


def sample_histogram(target: TargetDistribution, n: int, seed: int, stream: int = 0) -> UnlabeledSample:
    """An ``n``-point uniform-cube sample stored as counts over the ``2^d`` atoms.

    Equal in law to ``sample`` followed by tallying, but costs ``O(2^d)``
    regardless of ``n``.
    """
    if not target.is_hypercube:
        raise ValueError("histogram sampling is only available for the hypercube")
    d = target.dimension
    atoms = cube_points(d)
    counts = rng_for(seed, stream).multinomial(n, np.full(len(atoms), 1.0 / len(atoms)))
    return UnlabeledSample(atoms, counts)


def cube_points(d: int) -> np.ndarray:
    """All of ``{-1, +1}^d`` in lexicographic order (``-1`` before ``+1``)."""
    return np.array(list(itertools.product((-1.0, 1.0), repeat=d)))


# ----------------------------------------------------------------------------
# concepts


class Concept:
    """A ``{-1, +1}``-valued function on ``R^d``; subclasses implement ``evaluate``."""

    kind = "concept"

    def evaluate(self, points) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, points) -> np.ndarray:
        X = np.asarray(points, dtype=np.float64)
        if X.ndim == 1:
            return int(self.evaluate(X[None, :])[0])
        return self.evaluate(X)


@dataclass(frozen=True, eq=False)
class Halfspace(Concept):
    """``sgn(<w, x> + theta)``."""

    w: np.ndarray
    theta: float = 0.0
    kind = "halfspace"

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=np.float64))
        object.__setattr__(self, "theta", float(self.theta))

    def evaluate(self, points) -> np.ndarray:
        return sgn(np.asarray(points, dtype=np.float64) @ self.w + self.theta)

    def __repr__(self):
        return f"Halfspace(w={self.w.tolist()}, theta={self.theta})"


@dataclass(frozen=True, eq=False)
class FunctionOfHalfspaces(Concept):
    """``g(sgn(<w^1, x> + theta_1), ..., sgn(<w^p, x> + theta_p))``.

    ``table`` lists ``g`` over sign patterns in lexicographic order with
    ``-1`` before ``+1`` (first halfspace is the most significant position).
    """

    W: np.ndarray
    theta: np.ndarray
    table: tuple
    kind = "function_of_halfspaces"

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=np.float64))
        theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        table = tuple(int(v) for v in self.table)
        if theta.shape != (W.shape[0],):
            raise DimensionError("need one threshold per halfspace")
        if len(table) != 2 ** W.shape[0] or any(v not in (-1, 1) for v in table):
            raise ValueError("truth table must have 2^p entries in {-1, +1}")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "table", table)

    @property
    def p(self) -> int:
        return self.W.shape[0]

    def evaluate(self, points) -> np.ndarray:
        bits = (np.asarray(points, dtype=np.float64) @ self.W.T + self.theta >= 0).astype(np.int64)
        weights = 1 << np.arange(self.p - 1, -1, -1)
        return np.asarray(self.table, dtype=np.int64)[bits @ weights]

    def table_bits(self) -> str:
        return "".join("1" if v == 1 else "0" for v in self.table)

    @classmethod
    def from_bits(cls, W, theta, bits: str) -> "FunctionOfHalfspaces":
        return cls(W, theta, tuple(1 if b == "1" else -1 for b in bits))


@dataclass(frozen=True, eq=False)
class Parity(Concept):
    """Product of ``sgn(x_j)`` over ``subset`` (0-based coordinates); ``+1`` for the empty set."""

    subset: tuple
    dimension: int
    kind = "parity"

    def __post_init__(self):
        subset = tuple(sorted(int(j) for j in self.subset))
        if any(not 0 <= j < self.dimension for j in subset) or len(set(subset)) != len(subset):
            raise ValueError(f"bad parity subset {subset} for d={self.dimension}")
        object.__setattr__(self, "subset", subset)

    def evaluate(self, points) -> np.ndarray:
        X = np.asarray(points, dtype=np.float64)
        if not self.subset:
            return np.ones(X.shape[0], dtype=np.int64)
        return np.prod(sgn(X[:, list(self.subset)]), axis=1)

    def __repr__(self):
        return f"Parity({list(self.subset)})"


@dataclass(frozen=True, eq=False)
class LookupTable(Concept):
    """Labels stored per point; points not in the table get ``default``."""

    points: np.ndarray
    labels: np.ndarray
    default: int = 1
    kind = "lookup_table"

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.shape != (pts.shape[0],):
            raise DimensionError("one label per point required")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        # later rows win on duplicate points
        object.__setattr__(self, "_table", {tuple(r): int(l) for r, l in zip(pts.tolist(), labels.tolist())})

    def evaluate(self, points) -> np.ndarray:
        X = np.asarray(points, dtype=np.float64)
        get = self._table.get
        return np.fromiter((get(tuple(r), self.default) for r in X.tolist()), dtype=np.int64, count=X.shape[0])


def constant(value: int, d: int) -> Halfspace:
    """The constant concept ``value`` as a degenerate halfspace."""
    if value not in (-1, 1):
        raise ValueError("constant must be -1 or +1")
    return Halfspace(np.zeros(d), float(value))


def majority(d: int) -> Halfspace:
    return Halfspace(np.ones(d), 0.0)


def constants(d: int) -> list[Concept]:
    return [constant(1, d), constant(-1, d)]


def parities(d: int) -> list[Parity]:
    """All ``2^d`` parities, ordered by subset size then lexicographically."""
    return [Parity(s, d) for r in range(d + 1) for s in itertools.combinations(range(d), r)]


def grid_halfspaces(d: int, radius: int = 1) -> list[Halfspace]:
    """Halfspaces with integer weights in ``[-radius, radius]^d`` (nonzero) and integer thresholds in the same range."""
    out = []
    for w in itertools.product(range(-radius, radius + 1), repeat=d):
        if not any(w):
            continue
        for t in range(-radius, radius + 1):
            out.append(Halfspace(np.array(w, dtype=np.float64), float(t)))
    return out


def lookup_table_family(points) -> list[LookupTable]:
    """One lookup table per dichotomy of ``points``; shatters any duplicate-free set."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m = pts.shape[0]
    if m > 16:
        raise ValueError("lookup-table family is enumerated explicitly; keep m <= 16")
    return [LookupTable(pts, np.array(lab)) for lab in itertools.product((-1, 1), repeat=m)]


def evaluate_class(concepts: Sequence[Concept], points) -> np.ndarray:
    """``(len(concepts), m)`` matrix of concept values."""
    X = np.asarray(points, dtype=np.float64)
    return np.vstack([np.asarray(f.evaluate(X), dtype=np.int8) for f in concepts])


# ----------------------------------------------------------------------------
# labeled sources


@dataclass(frozen=True)
class LabeledSource:
    """Marginal draws labeled by ``teacher`` with labels flipped at ``noise_rate``."""

    marginal: TargetDistribution
    teacher: Concept
    noise_rate: float = 0.0

    def __post_init__(self):
        if not 0 <= self.noise_rate <= 0.5:
            raise ValueError("noise_rate must lie in [0, 1/2]")


@dataclass(frozen=True, eq=False)
class ExplicitSource:
    """Finitely many labeled atoms with probabilities ``weights``."""

    points: np.ndarray
    labels: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if not (labels.shape == w.shape == (pts.shape[0],)):
            raise DimensionError("points, labels and weights must align")
        if not np.all(np.abs(labels) == 1):
            raise ValueError("labels must lie in {-1, +1}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise NormalizationError("weights must be non-negative and sum to 1")
        for name, val in (("points", pts), ("labels", labels), ("weights", w)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def marginal(self) -> DiscreteDistribution:
        return DiscreteDistribution(self.points, self.weights)

    def error(self, predictions) -> float:
        """Weighted 0-1 error of per-atom predictions."""
        return float(np.dot(self.weights, np.asarray(predictions) != self.labels))


def draw_labeled(source, n: int, seed: int, stream: int = 0) -> LabeledSample:
    """``n`` labeled draws; uses substreams ``stream`` (points) and ``stream + 1`` (label noise)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(source, ExplicitSource):
        idx = rng_for(seed, stream).choice(len(source.weights), size=n, p=source.weights)
        return LabeledSample(source.points[idx], source.labels[idx])
    xs = sample(source.marginal, n, seed, stream=stream).points
    labels = np.asarray(source.teacher.evaluate(xs), dtype=np.int64)
    if source.noise_rate > 0:
        flips = rng_for(seed, stream + 1).random(n) < source.noise_rate
        labels = np.where(flips, -labels, labels)
    return LabeledSample(xs, labels)


def concept_opt(concepts: Sequence[Concept], sample_: LabeledSample, weights=None) -> tuple[Concept, float]:
    """Concept with least (optionally weighted) 0-1 error; first one wins ties."""
    if len(concepts) == 0:
        raise EmptyClassError("concept class is empty")
    values = evaluate_class(concepts, sample_.points)
    mistakes = values != sample_.labels[None, :].astype(np.int8)
    if weights is None:
        errors = mistakes.mean(axis=1)
    else:
        errors = mistakes @ np.asarray(weights, dtype=np.float64)
    best = int(np.argmin(errors))
    return concepts[best], float(errors[best])
