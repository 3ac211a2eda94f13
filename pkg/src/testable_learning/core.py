"""Domain types shared by every module.

Multi-indices are exponent tuples ``I`` with monomial ``x_I = prod_j x_j ** I_j``.
Every ordered collection of indices in this package uses graded
lexicographic order: by total degree, then lexicographically on the
exponent tuple, so the zero index always comes first.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, EmptySampleError, NormalizationError


class MultiIndex(tuple):
    """Exponent tuple of non-negative integers, hashable and ordered."""

    def __new__(cls, exponents: Iterable[int]):
        exps = tuple(int(e) for e in exponents)
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in {exps}")
        return super().__new__(cls, exps)

    @classmethod
    def zero(cls, d: int) -> "MultiIndex":
        return cls((0,) * d)

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        """Parse the ``"2,0,1"`` form used in JSON keys."""
        return cls(int(tok) for tok in text.split(","))

    @property
    def dimension(self) -> int:
        return len(self)

    def degree(self) -> int:
        return sum(self)

    def is_zero(self) -> bool:
        return not any(self)

    def is_multilinear(self) -> bool:
        return all(e <= 1 for e in self)

    def reduced(self) -> "MultiIndex":
        """Exponents mod 2 (the identity ``x_j**2 = 1`` on the cube)."""
        return MultiIndex(e % 2 for e in self)

    def key(self) -> str:
        return ",".join(str(e) for e in self)

    def sort_key(self) -> tuple:
        return (sum(self), tuple(self))

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"


def index_set(k: int, d: int, multilinear: bool = False) -> tuple[MultiIndex, ...]:
    """All indices of degree at most ``k`` in ``d`` variables, graded-lex ordered."""
    if k < 0 or d < 1:
        raise ValueError(f"need k >= 0 and d >= 1, got k={k}, d={d}")
    out = []
    for j in range(k + 1):
        if multilinear:
            if j > d:
                break
            level = []
            for support in itertools.combinations(range(d), j):
                exps = [0] * d
                for s in support:
                    exps[s] = 1
                level.append(MultiIndex(exps))
        else:
            # compositions of j into d non-negative parts (stars and bars)
            level = []
            for bars in itertools.combinations(range(j + d - 1), d - 1):
                prev, exps = -1, []
                for b in bars:
                    exps.append(b - prev - 1)
                    prev = b
                exps.append(j + d - 1 - prev - 1)
                level.append(MultiIndex(exps))
        level.sort()
        out.extend(level)
    return tuple(out)


def monomial_features(points: np.ndarray, indices: Sequence[MultiIndex]) -> np.ndarray:
    """Design matrix with column ``c`` holding ``x_{indices[c]}`` for every row of ``points``."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    m, d = X.shape
    out = np.empty((m, len(indices)), dtype=np.float64)
    powers: dict[tuple[int, int], np.ndarray] = {}

    def power(j: int, e: int) -> np.ndarray:
        if (j, e) not in powers:
            powers[(j, e)] = X[:, j] if e == 1 else power(j, e - 1) * X[:, j]
        return powers[(j, e)]

    for c, I in enumerate(indices):
        if len(I) != d:
            raise DimensionError(f"index {I} has length {len(I)}, points have dimension {d}")
        col = None
        for j, e in enumerate(I):
            if e:
                col = power(j, e).copy() if col is None else col * power(j, e)
        out[:, c] = 1.0 if col is None else col
    return out


# ----------------------------------------------------------------------------
# moment vectors and slack schedules


def _check_index_set(entries: Mapping, k: int, d: int, multilinear: bool, what: str) -> None:
    expected = index_set(k, d, multilinear)
    if tuple(entries) != expected:
        if set(entries) != set(expected):
            raise DimensionError(f"{what} entries do not match the index set for k={k}, d={d}")


@dataclass(frozen=True)
class MomentVector:
    degree_bound: int
    dimension: int
    entries: Mapping[MultiIndex, float]
    multilinear: bool = False

    def __post_init__(self):
        _check_index_set(self.entries, self.degree_bound, self.dimension, self.multilinear, "moment")
        ordered = {I: float(self.entries[I]) for I in index_set(self.degree_bound, self.dimension, self.multilinear)}
        object.__setattr__(self, "entries", ordered)

    @property
    def indices(self) -> tuple[MultiIndex, ...]:
        return tuple(self.entries)

    def __getitem__(self, I) -> float:
        return self.entries[MultiIndex(I)]

    def as_array(self) -> np.ndarray:
        return np.fromiter(self.entries.values(), dtype=np.float64, count=len(self.entries))

    @classmethod
    def from_oracle(cls, oracle, k: int, d: int, multilinear: bool = False) -> "MomentVector":
        return cls(k, d, {I: oracle(I) for I in index_set(k, d, multilinear)}, multilinear)


@dataclass(frozen=True)
class SlackSchedule:
    """Per-index moment slack; zero at the constant index, positive elsewhere.

    ``provenance`` is one of ``"uniform"``, ``"subexponential"`` or ``"custom"``;
    ``params`` records the generating parameters (and, for the subexponential
    schedule, the intermediate per-degree slacks and the moment bound).
    """

    degree_bound: int
    dimension: int
    entries: Mapping[MultiIndex, float]
    multilinear: bool = False
    provenance: str = "custom"
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        _check_index_set(self.entries, self.degree_bound, self.dimension, self.multilinear, "slack")
        ordered = {I: float(self.entries[I]) for I in index_set(self.degree_bound, self.dimension, self.multilinear)}
        for I, v in ordered.items():
            if I.is_zero():
                if v != 0.0:
                    raise ValueError("slack at the zero index must be exactly 0")
            elif not v > 0:
                raise ValueError(f"slack at {I} must be positive, got {v}")
        object.__setattr__(self, "entries", ordered)

    @property
    def indices(self) -> tuple[MultiIndex, ...]:
        return tuple(self.entries)

    def __getitem__(self, I) -> float:
        return self.entries[MultiIndex(I)]

    def as_array(self) -> np.ndarray:
        return np.fromiter(self.entries.values(), dtype=np.float64, count=len(self.entries))

    def scaled(self, factor: float) -> "SlackSchedule":
        return SlackSchedule(
            self.degree_bound, self.dimension, {I: v * factor for I, v in self.entries.items()},
            self.multilinear, "custom", {"scaled_from": self.provenance, "factor": factor},
        )

    @classmethod
    def uniform(cls, delta: float, k: int, d: int, multilinear: bool = False) -> "SlackSchedule":
        entries = {I: (0.0 if I.is_zero() else float(delta)) for I in index_set(k, d, multilinear)}
        return cls(k, d, entries, multilinear, "uniform", {"delta": float(delta)})


# ----------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class Polynomial:
    degree_bound: int
    dimension: int
    coefficients: Mapping[MultiIndex, float]

    def __post_init__(self):
        coefs = {}
        for I, c in self.coefficients.items():
            I = MultiIndex(I)
            if len(I) != self.dimension:
                raise DimensionError(f"index {I} does not have dimension {self.dimension}")
            if I.degree() > self.degree_bound:
                raise ValueError(f"index {I} exceeds degree bound {self.degree_bound}")
            coefs[I] = coefs.get(I, 0.0) + float(c)
        coefs = dict(sorted(coefs.items(), key=lambda kv: kv[0].sort_key()))
        object.__setattr__(self, "coefficients", coefs)

    @classmethod
    def zero(cls, k: int, d: int) -> "Polynomial":
        return cls(k, d, {})

    @classmethod
    def from_array(cls, indices: Sequence[MultiIndex], values, k: int | None = None) -> "Polynomial":
        values = np.asarray(values, dtype=np.float64)
        if len(indices) != len(values):
            raise DimensionError("coefficient array and index list differ in length")
        if k is None:
            k = max((I.degree() for I in indices), default=0)
        d = len(indices[0]) if indices else 0
        return cls(k, d, {I: v for I, v in zip(indices, values) if v != 0.0})

    def coefficient(self, I) -> float:
        return self.coefficients.get(MultiIndex(I), 0.0)

    def coefficient_array(self, indices: Sequence[MultiIndex]) -> np.ndarray:
        return np.array([self.coefficients.get(I, 0.0) for I in indices], dtype=np.float64)

    def __call__(self, x) -> float:
        return polynomial_eval(self, x)

    def evaluate_many(self, points) -> np.ndarray:
        X = np.asarray(points, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise DimensionError(f"expected points of shape (m, {self.dimension}), got {X.shape}")
        if not self.coefficients:
            return np.zeros(X.shape[0])
        idx = list(self.coefficients)
        return monomial_features(X, idx) @ np.fromiter(self.coefficients.values(), dtype=np.float64)

    def l1_norm(self) -> float:
        """Sum of absolute nonconstant coefficients."""
        return float(sum(abs(c) for I, c in self.coefficients.items() if not I.is_zero()))

    def weighted_l1(self, slack: SlackSchedule) -> float:
        return weighted_l1(self, slack)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if self.dimension != other.dimension:
            raise DimensionError("cannot add polynomials of different dimension")
        coefs = dict(self.coefficients)
        for I, c in other.coefficients.items():
            coefs[I] = coefs.get(I, 0.0) + c
        return Polynomial(max(self.degree_bound, other.degree_bound), self.dimension, coefs)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.degree_bound, self.dimension, {I: -c for I, c in self.coefficients.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)


def polynomial_eval(p: Polynomial, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.dimension,):
        raise DimensionError(f"point has shape {x.shape}, polynomial dimension is {p.dimension}")
    total = 0.0
    for I, c in p.coefficients.items():
        term = c
        for xj, e in zip(x, I):
            if e:
                term *= xj**e
        total += term
    return float(total)


def weighted_l1(p: Polynomial, slack: SlackSchedule) -> float:
    """Slack-weighted l1 norm ``sum_I |p_I| * slack_I``; the constant term contributes 0."""
    if p.dimension != slack.dimension or p.degree_bound > slack.degree_bound:
        raise DimensionError(
            f"polynomial (k={p.degree_bound}, d={p.dimension}) does not fit "
            f"slack (k={slack.degree_bound}, d={slack.dimension})"
        )
    total = 0.0
    for I, c in p.coefficients.items():
        if c == 0.0 or I.is_zero():
            continue
        if I not in slack.entries:
            raise DimensionError(f"slack schedule has no entry for {I}")
        total += abs(c) * slack.entries[I]
    return float(total)


# ----------------------------------------------------------------------------
# samples and explicit distributions


def _frozen_array(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class UnlabeledSample:
    """Points of a sample, one row each.

    ``counts`` optionally gives integer multiplicities, so that a large
    sample on a finite support can be stored as its histogram.
    """

    points: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self):
        pts = _frozen_array(self.points)
        if pts.ndim == 1:
            pts = _frozen_array(pts[:, None])
        if pts.ndim != 2:
            raise DimensionError("points must be a 2-d array")
        object.__setattr__(self, "points", pts)
        if self.counts is not None:
            counts = _frozen_array(self.counts, dtype=np.int64)
            if counts.shape != (pts.shape[0],) or np.any(counts < 0):
                raise DimensionError("counts must be non-negative, one per point")
            object.__setattr__(self, "counts", counts)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        """Number of draws (sum of counts when given)."""
        return int(self.counts.sum()) if self.counts is not None else self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    def weights(self) -> np.ndarray:
        """Empirical probability of each stored row."""
        if self.size == 0:
            raise EmptySampleError("sample is empty")
        if self.counts is None:
            return np.full(self.points.shape[0], 1.0 / self.points.shape[0])
        return self.counts / self.counts.sum()


@dataclass(frozen=True, eq=False)
class LabeledSample:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = _frozen_array(self.points)
        if pts.ndim == 1:
            pts = _frozen_array(pts[:, None])
        labels = _frozen_array(self.labels, dtype=np.int64)
        if labels.shape != (pts.shape[0],):
            raise DimensionError("labels must have one entry per point")
        if labels.size and not np.all(np.abs(labels) == 1):
            raise ValueError("labels must lie in {-1, +1}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    def marginal(self) -> UnlabeledSample:
        return UnlabeledSample(self.points)


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finitely supported distribution: atoms ``points`` with probabilities ``weights``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = _frozen_array(self.points)
        if pts.ndim == 1:
            pts = _frozen_array(pts[:, None])
        w = _frozen_array(self.weights)
        if w.shape != (pts.shape[0],):
            raise DimensionError("one weight per point required")
        if np.any(w < 0) or not math.isclose(float(w.sum()), 1.0, abs_tol=1e-12):
            raise NormalizationError(f"weights must be non-negative and sum to 1 (sum={w.sum()!r})")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def expectation(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=np.float64)))

    def moments(self, k: int, multilinear: bool = False) -> MomentVector:
        idx = index_set(k, self.dimension, multilinear)
        vals = self.weights @ monomial_features(self.points, idx)
        entries = dict(zip(idx, vals))
        entries[idx[0]] = 1.0
        return MomentVector(k, self.dimension, entries, multilinear)

    @classmethod
    def uniform(cls, points) -> "DiscreteDistribution":
        pts = np.asarray(points, dtype=np.float64)
        return cls(pts, np.full(len(pts), 1.0 / len(pts)))


# ----------------------------------------------------------------------------
# hypotheses and reports


@dataclass(frozen=True)
class Hypothesis:
    """Predicts ``+1`` exactly when ``polynomial(x) >= threshold``."""

    polynomial: Polynomial
    threshold: float

    def predict(self, points) -> np.ndarray:
        X = np.asarray(points, dtype=np.float64)
        single = X.ndim == 1
        vals = self.polynomial.evaluate_many(X[None, :] if single else X)
        out = np.where(vals >= self.threshold, 1, -1)
        return out[0] if single else out

    def evaluate(self, points) -> np.ndarray:
        return self.predict(points)


@dataclass(frozen=True)
class Violation:
    index: MultiIndex
    empirical: float
    target: float
    slack: float


@dataclass(frozen=True)
class TesterReport:
    __test__ = False  # not a pytest class

    accepted: bool
    violations: tuple[Violation, ...]
    max_violation_ratio: float

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))
        if self.accepted != (len(self.violations) == 0):
            raise ValueError("accepted must be true exactly when there are no violations")
