"""Induced dynamics on finite compact sets.

Elements of the hyperspace K(X) are represented by finite point clouds
(:class:`FiniteCompact`); the induced map acts pointwise and the Hausdorff
metric is computed by brute force over all pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import Diverged, VariantMismatch
from .escape_analysis import (
    LimitSetEstimate,
    Outcome,
    Verdict,
    classify_escape_many,
    greedy_clusters,
)
from .flows import FlowSystem
from .phase_space import CompactExhaustion, EuclideanPoint, as_point


@dataclass(frozen=True)
class FiniteCompact:
    """Nonempty finite subset of R^n; exact duplicates are dropped, order kept."""

    points: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray([as_point(p).coords for p in self.points]
                                       if not isinstance(self.points, np.ndarray) else self.points, dtype=float))
        if arr.size == 0:
            raise ValueError("a hyperspace element must be nonempty")
        if not np.isfinite(arr).all():
            raise ValueError("finite compact with non-finite coordinates")
        _, first = np.unique(arr, axis=0, return_index=True)
        arr = np.ascontiguousarray(arr[np.sort(first)])
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return (EuclideanPoint(tuple(p)) for p in self.points)

    def issubset(self, other: "FiniteCompact") -> bool:
        return all((other.points == p).all(axis=1).any() for p in self.points)


def induced_map(sys: FlowSystem, A: FiniteCompact, n) -> FiniteCompact:
    """Pointwise image ``Phi^n(A)``.

    If any member diverges the whole image is reported as :class:`Diverged`,
    with ``members`` listing ``(index, blowup_time)`` for each failing point.
    """
    if sys.symbolic:
        raise VariantMismatch("hyperspace dynamics are Euclidean only")
    if n == 0:
        return A
    images, failed = [], []
    for i, p in enumerate(A.points):
        try:
            images.append(sys.evaluate(p, n).coords)
        except Diverged as exc:
            failed.append((i, exc.blowup_time))
    if failed:
        raise Diverged(min(t for _, t in failed) if n > 0 else max(t for _, t in failed),
                       f"{len(failed)} of {len(A)} points diverged", members=failed)
    return FiniteCompact(np.array(images), A.label)


def hausdorff_distance(A: FiniteCompact, B: FiniteCompact) -> float:
    """``max(sup_a d(a, B), sup_b d(b, A))`` over all pairs."""
    if A.dim != B.dim:
        raise VariantMismatch(f"dimension mismatch {A.dim} vs {B.dim}")
    return float(_kernels.hausdorff(A.points, B.points))


@dataclass
class SetSequenceWindow:
    """Images ``Phi_K^i(A)`` for integer ``i`` in ``[start, stop]`` (signed by direction).

    ``states[p, k]`` is point ``p`` at index ``start + k``; NaN after divergence.
    """

    A: FiniteCompact
    indices: np.ndarray
    states: np.ndarray
    blowup: list = field(default_factory=list)

    def image(self, k: int) -> np.ndarray:
        pts = self.states[:, k]
        return pts[np.isfinite(pts).all(axis=1)]


def image_window(sys: FlowSystem, A: FiniteCompact, stop: int, direction: int = 1) -> SetSequenceWindow:
    """Iterate the time-one map (or its inverse) ``stop`` times on every point of A."""
    if sys.symbolic:
        raise VariantMismatch("hyperspace dynamics are Euclidean only")
    orbits = sys.orbits(list(A.points), direction * stop, 1)
    states = np.full((len(A), stop + 1, A.dim), np.nan)
    blowup = []
    for p, o in enumerate(orbits):
        states[p, : len(o.times)] = o.states
        blowup.append(o.blowup_time)
    return SetSequenceWindow(A, direction * np.arange(stop + 1), states, blowup)


@dataclass(frozen=True)
class HyperspaceParams:
    window: tuple[int, int] = (200, 1000)  # tail indices [i0, i1] of the time-one map
    eps: float = 0.1
    min_visits: int = 10
    direction: int = 1
    max_level: int = 10

    def to_dict(self) -> dict:
        return {"window": list(self.window), "eps": self.eps, "min_visits": self.min_visits,
                "direction": self.direction}


def estimate_omega_from_window(win: SetSequenceWindow, i0: int, eps: float, min_visits: int = 10,
                               exh: CompactExhaustion | None = None) -> LimitSetEstimate:
    """limsup estimate: keep a cluster if its points come from >= ``min_visits``
    distinct image indices in the tail ``k >= i0``."""
    tail = win.states[:, i0:]
    n_pts, n_idx, d = tail.shape
    flat = tail.transpose(1, 0, 2).reshape(-1, d)  # index-major: image by image
    which = np.repeat(np.arange(n_idx), n_pts)
    ok = np.isfinite(flat).all(axis=1)
    unclustered = 0
    if exh is not None and ok.any():
        inside = np.zeros_like(ok)
        inside[ok] = exh.top.contains_many(flat[ok])
        unclustered = int((ok & ~inside).sum())
        ok = inside
    flat, which = flat[ok], which[ok]
    window = (float(win.indices[i0]), float(win.indices[-1]))
    if len(flat) == 0:
        return LimitSetEstimate([], eps, window, unclustered=unclustered,
                                diverged=any(b is not None for b in win.blowup))
    centers_idx, labels = greedy_clusters(flat, eps)
    distinct = np.zeros(len(centers_idx), dtype=np.int64)
    for c in range(len(centers_idx)):
        distinct[c] = np.unique(which[labels == c]).size
    good = np.flatnonzero(distinct >= min_visits)
    return LimitSetEstimate([np.asarray(flat[centers_idx[c]]) for c in good], eps, window,
                            tuple(int(distinct[c]) for c in good), unclustered)


def estimate_omega_K(sys: FlowSystem, A: FiniteCompact, window: tuple[int, int] = (200, 1000),
                     eps: float = 0.1, min_visits: int = 10, direction: int = 1,
                     exh: CompactExhaustion | None = None) -> LimitSetEstimate:
    """Estimate ``limsup_i Phi_K^i(A)`` from images with index in ``window``.

    A point enters the estimate when its ε-cluster meets at least
    ``min_visits`` of the tail images (the finite stand-in for "infinitely
    many i").
    """
    i0, i1 = window
    if i1 - i0 < 1:
        raise ValueError("window must contain at least two indices")
    win = image_window(sys, A, i1, direction)
    return estimate_omega_from_window(win, i0, eps, min_visits, exh)


@dataclass
class EquivalenceReport:
    """The three escape predicates (P1, P3, P4) for one finite set."""

    label: str
    p1_all_escape: bool | None
    p3_limsup_empty: bool
    p4_hyperspace_escape: bool | None
    exit_indices: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def resolved(self) -> bool:
        return self.p1_all_escape is not None and self.p4_hyperspace_escape is not None

    @property
    def agree(self) -> bool | None:
        if not self.resolved:
            return None
        return self.p1_all_escape == self.p3_limsup_empty == self.p4_hyperspace_escape

    @property
    def outcome(self) -> Outcome:
        if not self.resolved:
            return Outcome.SKIP
        return Outcome.PASS if self.agree else Outcome.FAIL


def hyperspace_escape(win: SetSequenceWindow, exh: CompactExhaustion, tail_start: int) -> tuple[bool | None, list]:
    """Does ``Phi_K^i(A)`` eventually miss every level ``K_m``?

    Uses the hyperspace neighbourhoods ``{B : B ∩ K_m ≠ ∅}``: the image
    sequence escapes at level m when no image meets ``K_m`` after a recorded
    exit index. Returns ``(escapes, exit_index_per_level)``; None when no
    image ever met the largest level.
    """
    n_pts, n_idx, _ = win.states.shape
    flat = win.states.reshape(-1, win.states.shape[2])
    ok = np.isfinite(flat).all(axis=1)
    exits = []
    escapes = True
    ever = False
    for k in exh.levels:
        hit = np.zeros(len(flat), dtype=bool)
        hit[ok] = k.contains_many(flat[ok])
        meets = hit.reshape(n_pts, n_idx).any(axis=0)
        idx = np.flatnonzero(meets)
        ever = ever or idx.size > 0
        if idx.size and idx[-1] >= tail_start:
            escapes = False
            exits.append(None)
        else:
            exits.append(int(idx[-1]) + 1 if idx.size else 0)
    if escapes and not ever:
        return None, exits
    return escapes, exits


def check_hyperspace_escape_equivalence(sys: FlowSystem, A: FiniteCompact, exh: CompactExhaustion,
                                        params: HyperspaceParams = HyperspaceParams(),
                                        point_t_max: float | None = None) -> EquivalenceReport:
    """Evaluate (P1) every point escapes, (P3) the limsup estimate is empty and
    (P4) A escapes in the hyperspace, for the time-one map in ``params.direction``."""
    if sys.symbolic:
        raise VariantMismatch("hyperspace checks are Euclidean only")
    i0, i1 = params.window
    t_max = point_t_max or float(i1)
    verdicts = classify_escape_many(sys, list(A.points), exh, t_max, backward=params.direction < 0)
    dirv = [v.forward if params.direction > 0 else v.backward for v in verdicts]
    if any(v is Verdict.INCONCLUSIVE or v is Verdict.NOT_APPLICABLE for v in dirv):
        p1 = None
    else:
        p1 = all(v is Verdict.ESCAPING for v in dirv)
    win = image_window(sys, A, i1, params.direction)
    est = estimate_omega_from_window(win, i0, params.eps, params.min_visits, exh)
    p4, exits = hyperspace_escape(win, exh, i0)
    return EquivalenceReport(A.label, p1, est.empty, p4, exits,
                             {**params.to_dict(), "point_t_max": t_max, "exhaustion": exh.describe()})


def pointwise_subset(sys: FlowSystem, A: FiniteCompact, B: FiniteCompact, n) -> bool:
    """``A ⊆ B`` ⇒ ``Phi_K^n(A) ⊆ Phi_K^n(B)``; returns whether the images nest."""
    return induced_map(sys, A, n).issubset(induced_map(sys, B, n))


__all__ = [
    "EquivalenceReport",
    "FiniteCompact",
    "HyperspaceParams",
    "SetSequenceWindow",
    "check_hyperspace_escape_equivalence",
    "estimate_omega_K",
    "hausdorff_distance",
    "image_window",
    "induced_map",
]
