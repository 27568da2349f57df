"""Points, metrics and compact regions.

Two phase-space families are supported: Euclidean space R^n and the
sequence space N^N with the product topology. Points of N^N are given by
index rules (``i -> s_i`` for ``i >= 1``) and are only ever materialized up
to a finite horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import HorizonExhausted, VariantMismatch

DEFAULT_HORIZON = 2**20
DEFAULT_CYLINDER_HORIZON = 4096

# Differences past this index contribute less than the smallest double.
_FLOAT_DEPTH = 1100

IndexRule = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EuclideanPoint:
    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in np.ravel(self.coords))
        if not coords:
            raise ValueError("a Euclidean point needs at least one coordinate")
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite coordinates {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]


class _PrefixCache:
    """Grows a materialized copy of an index rule on demand.

    Shared by a point and all of its shifts.
    """

    def __init__(self, rule: IndexRule, limit: int):
        self.rule = rule
        self.limit = limit
        self.values = np.empty(0, dtype=np.int64)

    def upto(self, stop: int) -> np.ndarray:
        if stop > self.limit:
            raise HorizonExhausted(f"index {stop} beyond horizon {self.limit}")
        have = self.values.size
        if stop > have:
            new = min(self.limit, max(stop, 2 * have, 1024))
            idx = np.arange(have + 1, new + 1, dtype=np.int64)
            vals = np.asarray(self.rule(idx), dtype=np.int64)
            if vals.shape != idx.shape:
                vals = np.broadcast_to(vals, idx.shape).astype(np.int64)
            if (vals < 1).any():
                bad = int(idx[np.argmax(vals < 1)])
                raise ValueError(f"symbolic rule gives a value < 1 at index {bad}")
            self.values = np.concatenate([self.values, vals])
        return self.values[:stop]


@dataclass(frozen=True, eq=False)
class SymbolicPoint:
    """A point of N^N defined by a vectorized index rule.

    ``rule`` receives a 1-based int64 index array and returns the values.
    ``offset`` counts how many times the point has been shifted; the
    visible sequence is ``s_i = rule(i + offset)`` for ``1 <= i <= horizon``.
    """

    rule: IndexRule
    horizon: int = DEFAULT_HORIZON
    offset: int = 0
    name: str = ""
    _cache: _PrefixCache | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.horizon < 1:
            raise HorizonExhausted("symbolic point has no materializable coordinates")
        if self._cache is None:
            object.__setattr__(self, "_cache", _PrefixCache(self.rule, self.offset + self.horizon))

    def prefix(self, length: int) -> np.ndarray:
        """First ``length`` coordinates (``s_1 .. s_length``)."""
        length = min(length, self.horizon)
        return self._cache.upto(self.offset + length)[self.offset :]

    def value(self, i: int) -> int:
        if not 1 <= i <= self.horizon:
            raise HorizonExhausted(f"index {i} outside 1..{self.horizon}")
        return int(self._cache.upto(self.offset + i)[self.offset + i - 1])

    def shifted(self, n: int) -> "SymbolicPoint":
        if n < 0:
            raise ValueError("shift count must be nonnegative")
        if n >= self.horizon:
            raise HorizonExhausted(f"cannot shift by {n} with horizon {self.horizon}")
        label = f"{self.name}>>{n}" if self.name else ""
        return SymbolicPoint(self.rule, self.horizon - n, self.offset + n, label, self._cache)

    def agreement_length(self, other: "SymbolicPoint", limit: int | None = None) -> int:
        """Length of the common prefix, capped at ``limit`` (default: shared horizon)."""
        cap = min(self.horizon, other.horizon)
        if limit is not None:
            cap = min(cap, limit)
        chunk = 256
        start = 0
        while start < cap:
            stop = min(cap, start + chunk)
            a = self.prefix(stop)[start:]
            b = other.prefix(stop)[start:]
            diff = np.flatnonzero(a != b)
            if diff.size:
                return start + int(diff[0])
            start = stop
            chunk *= 4
        return cap

    def agrees(self, other: "SymbolicPoint", length: int) -> bool:
        return self.agreement_length(other, length) >= length

    def __repr__(self):
        head = ",".join(str(v) for v in self.prefix(8))
        label = self.name or "symbolic"
        return f"SymbolicPoint({label}: {head},...; H={self.horizon})"


PhasePoint = Union[EuclideanPoint, SymbolicPoint]


def as_point(p) -> PhasePoint:
    """Coerce a coordinate sequence (or an existing point) to a phase point."""
    if isinstance(p, (EuclideanPoint, SymbolicPoint)):
        return p
    return EuclideanPoint(tuple(np.ravel(np.asarray(p, dtype=float))))


def constant_sequence(value: int = 1, horizon: int = DEFAULT_HORIZON) -> SymbolicPoint:
    return SymbolicPoint(lambda i: np.full(i.shape, value, dtype=np.int64), horizon, name=f"const{value}")


def _bit_length(i: np.ndarray) -> np.ndarray:
    # exact for integers < 2**53: i = m * 2**e with m in [0.5, 1)
    return np.frexp(i.astype(np.float64))[1].astype(np.int64)


def ceil_log2_succ(i: np.ndarray) -> np.ndarray:
    """``ceil(log2(i + 1))`` for integer arrays with ``i >= 1``."""
    return _bit_length(np.asarray(i, dtype=np.int64))


class Metric(Enum):
    EUCLIDEAN = "euclidean-norm"
    SYMBOLIC_PRODUCT = "symbolic-product"

    @classmethod
    def for_point(cls, p: PhasePoint) -> "Metric":
        return cls.SYMBOLIC_PRODUCT if isinstance(p, SymbolicPoint) else cls.EUCLIDEAN


def _symbolic_distance(a: SymbolicPoint, b: SymbolicPoint) -> float:
    # compared on the common materialized prefix
    cap = min(a.horizon, b.horizon)
    head = min(cap, _FLOAT_DEPTH)
    diff = np.flatnonzero(a.prefix(head) != b.prefix(head)) + 1
    if diff.size:
        return math.fsum(math.ldexp(1.0, -int(i)) for i in diff)
    if head < cap and a.agreement_length(b) < cap:
        # differ only past float resolution; keep d > 0 for distinct points
        return 5e-324
    return 0.0


def distance(a: PhasePoint, b: PhasePoint, metric: Metric | None = None) -> float:
    """Euclidean norm distance, or ``sum_i 2**-i * min(1, |s_i - t_i|)`` on N^N."""
    a, b = as_point(a), as_point(b)
    if type(a) is not type(b):
        raise VariantMismatch(f"cannot measure between {type(a).__name__} and {type(b).__name__}")
    metric = metric or Metric.for_point(a)
    if metric is not Metric.for_point(a):
        raise VariantMismatch(f"metric {metric.value} does not apply to {type(a).__name__}")
    if isinstance(a, SymbolicPoint):
        return _symbolic_distance(a, b)
    if a.dim != b.dim:
        raise VariantMismatch(f"dimension mismatch {a.dim} vs {b.dim}")
    return float(np.sqrt(np.sum((a.array - b.array) ** 2)))


# ---------------------------------------------------------------- regions


class CompactRegion:
    """A compact set with a closed (``<=``) membership test."""

    symbolic = False

    def contains(self, p) -> bool:
        p = as_point(p)
        self._check_family(p)
        if isinstance(p, SymbolicPoint):
            return self._contains_symbolic(p)
        return bool(self.contains_many(np.asarray(p.array)[None, :])[0])

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        raise VariantMismatch(f"{type(self).__name__} holds symbolic points")

    def _contains_symbolic(self, p: SymbolicPoint) -> bool:
        raise VariantMismatch(f"{type(self).__name__} holds Euclidean points")

    def _check_family(self, p):
        if isinstance(p, SymbolicPoint) != self.symbolic:
            raise VariantMismatch(f"{type(p).__name__} tested against {type(self).__name__}")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(CompactRegion):
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    def contains_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        with np.errstate(all="ignore"):
            d = np.sqrt(((pts - np.asarray(self.center)) ** 2).sum(axis=1))
            return d <= self.radius

    def sample(self, n, rng):
        dim = len(self.center)
        v = rng.normal(size=(n, dim))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        r = self.radius * rng.random(n) ** (1.0 / dim)
        return np.asarray(self.center) + v * r[:, None]


@dataclass(frozen=True)
class Box(CompactRegion):
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        iv = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        if not iv or any(lo > hi for lo, hi in iv):
            raise ValueError(f"box intervals must be nonempty, got {self.intervals}")
        object.__setattr__(self, "intervals", iv)

    def contains_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lo = np.array([a for a, _ in self.intervals])
        hi = np.array([b for _, b in self.intervals])
        with np.errstate(all="ignore"):
            return ((pts >= lo) & (pts <= hi)).all(axis=1)

    def sample(self, n, rng):
        lo = np.array([a for a, _ in self.intervals])
        hi = np.array([b for _, b in self.intervals])
        return lo + (hi - lo) * rng.random((n, len(lo)))


class Cylinder(CompactRegion):
    """``{s in N^N : s_i <= b(i) for i <= horizon}`` for a bound rule ``b >= 1``."""

    symbolic = True

    def __init__(self, bound: IndexRule, horizon: int = DEFAULT_CYLINDER_HORIZON, label: str = ""):
        if horizon < 1:
            raise ValueError("cylinder horizon must be >= 1")
        self.bound = bound
        self.horizon = horizon
        self.label = label
        idx = np.arange(1, horizon + 1, dtype=np.int64)
        b = np.asarray(bound(idx), dtype=np.int64)
        if b.shape != idx.shape:
            b = np.broadcast_to(b, idx.shape).astype(np.int64)
        if (b < 1).any():
            raise ValueError("cylinder bound rule must be >= 1")
        self._bounds = b

    def _contains_symbolic(self, p):
        cap = min(self.horizon, p.horizon)
        start, chunk = 0, 64
        while start < cap:
            stop = min(cap, start + chunk)
            if (p.prefix(stop)[start:] > self._bounds[start:stop]).any():
                return False
            start = stop
            chunk *= 8
        return True

    def bound_at(self, i: int) -> int:
        return int(self._bounds[i - 1])

    def __repr__(self):
        return f"Cylinder({self.label or 'b'}; H={self.horizon})"


class FiniteRegion(CompactRegion):
    """Finitely many points, each thickened by a tolerance ``eps``."""

    def __init__(self, points: Iterable, eps: float = 0.0):
        pts = [as_point(p) for p in points]
        if not pts:
            raise ValueError("finite region needs at least one point")
        kinds = {type(p) for p in pts}
        if len(kinds) != 1:
            raise VariantMismatch("finite region mixes point families")
        if eps < 0:
            raise ValueError("tolerance must be nonnegative")
        self.points = pts
        self.eps = float(eps)
        self.symbolic = isinstance(pts[0], SymbolicPoint)
        if not self.symbolic:
            self._arr = np.array([p.coords for p in pts])

    def contains_many(self, pts):
        if self.symbolic:
            return super().contains_many(pts)
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        with np.errstate(all="ignore"):
            d = np.sqrt(((pts[:, None, :] - self._arr[None, :, :]) ** 2).sum(axis=2))
            return (d <= self.eps).any(axis=1)

    def _contains_symbolic(self, p):
        return any(distance(p, q) <= self.eps for q in self.points)


class ImageRegion(CompactRegion):
    """Image ``h(K)`` of a Euclidean region under a homeomorphism, tested via ``h^-1``."""

    def __init__(self, base: CompactRegion, inverse: Callable[[np.ndarray], np.ndarray], label: str = ""):
        if base.symbolic:
            raise VariantMismatch("image regions are Euclidean only")
        self.base = base
        self.inverse = inverse
        self.label = label

    def contains_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros(len(pts), dtype=bool)
        ok = np.isfinite(pts).all(axis=1)
        if ok.any():
            with np.errstate(all="ignore"):
                pre = np.atleast_2d(self.inverse(pts[ok]))
            out[ok] = self.base.contains_many(pre)
        return out


def contains(region: CompactRegion, p) -> bool:
    """Closed membership test; raises :class:`VariantMismatch` across families."""
    return region.contains(p)


# ------------------------------------------------------------ exhaustions


@dataclass(frozen=True)
class CompactExhaustion:
    """Nested compacts ``K_1 ⊆ K_2 ⊆ ... ⊆ K_max_level`` built by ``level(m)``."""

    level: Callable[[int], CompactRegion]
    max_level: int = 10
    description: str = ""
    _levels: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.max_level < 1:
            raise ValueError("exhaustion needs at least one level")
        object.__setattr__(self, "_levels", tuple(self.level(m) for m in range(1, self.max_level + 1)))

    @property
    def levels(self) -> tuple[CompactRegion, ...]:
        return self._levels

    @property
    def symbolic(self) -> bool:
        return self._levels[0].symbolic

    @property
    def top(self) -> CompactRegion:
        return self._levels[-1]

    def membership(self, states) -> np.ndarray:
        """Boolean matrix ``[level, sample]``."""
        if self.symbolic:
            return np.array([[k.contains(s) for s in states] for k in self._levels], dtype=bool).reshape(
                len(self._levels), len(states)
            )
        states = np.asarray(states, dtype=float)
        if states.size == 0:
            return np.zeros((len(self._levels), 0), dtype=bool)
        return np.array([k.contains_many(states) for k in self._levels])

    def nesting_violations(self, samples: Sequence) -> list[tuple[int, int]]:
        """Pairs ``(m, sample_index)`` with the sample in ``K_m`` but not ``K_{m+1}``."""
        mem = self.membership(samples)
        bad = mem[:-1] & ~mem[1:]
        return [(int(m) + 1, int(j)) for m, j in zip(*np.nonzero(bad))]

    def describe(self) -> dict:
        return {"description": self.description, "max_level": self.max_level}


def ball_exhaustion(dim: int, max_level: int = 10, radius: Callable[[int], float] | None = None,
                    center: Sequence[float] | None = None) -> CompactExhaustion:
    radius = radius or (lambda m: float(m))
    center = tuple(center) if center is not None else (0.0,) * dim
    return CompactExhaustion(lambda m: Ball(center, radius(m)), max_level, f"balls r(m) about {center}")


def dyadic_cylinder_bound(m: int) -> IndexRule:
    """``b_m(i) = m * 2**ceil(log2(i + 1))``."""
    return lambda i: m * np.left_shift(np.int64(1), ceil_log2_succ(i))


def cylinder_exhaustion(max_level: int = 10, bound: Callable[[int], IndexRule] = dyadic_cylinder_bound,
                        horizon: int = DEFAULT_CYLINDER_HORIZON) -> CompactExhaustion:
    return CompactExhaustion(
        lambda m: Cylinder(bound(m), horizon, label=f"b_{m}"), max_level, "cylinders b_m(i)=m*2^ceil(log2(i+1))"
    )


def image_exhaustion(base: CompactExhaustion, inverse: Callable[[np.ndarray], np.ndarray],
                     label: str = "") -> CompactExhaustion:
    return CompactExhaustion(
        lambda m: ImageRegion(base.levels[m - 1], inverse, label), base.max_level,
        f"image of [{base.description}] {label}".strip(),
    )
