"""Finite-horizon escape classification, limit-set estimation and the
property checks built on them.

A forward verdict is computed from one sampled orbit over ``[0, t_max]``
against a compact exhaustion ``K_1 ⊆ ... ⊆ K_M``. The second half of the run
(``tail_fraction``) is the tail window: a sample inside some ``K_m`` there is
a re-entry witness (non-escaping); if every level was left before the tail
the point is escaping, with the exit time ``T_K`` of each level recorded. A
diverged orbit counts as having left every level at its blowup time. An
orbit that never entered the largest level is inconclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import Diverged, NotAConjugacy
from .expressions import CustomMap
from .flows import FlowSystem, Orbit
from .phase_space import (
    CompactExhaustion,
    SymbolicPoint,
    as_point,
    distance,
    image_exhaustion,
)


class Verdict(str, Enum):
    ESCAPING = "escaping"
    NON_ESCAPING = "non-escaping"
    INCONCLUSIVE = "inconclusive"
    NOT_APPLICABLE = "not-applicable"


class Outcome(str, Enum):
    """Result of a property check; SKIP when its hypothesis could not be resolved."""

    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"

    def __bool__(self):
        return self is not Outcome.FAIL


@dataclass(frozen=True)
class LevelWitness:
    level: int
    exit_time: float | None  # T_K: orbit outside K_level from here on
    reentry_time: float | None  # a tail sample inside K_level


@dataclass
class DirectionReport:
    verdict: Verdict
    witnesses: tuple[LevelWitness, ...] = ()
    blowup_time: float | None = None
    note: str = ""

    @property
    def exit_times(self) -> list[float | None]:
        return [w.exit_time for w in self.witnesses]


@dataclass
class EscapeVerdict:
    forward: Verdict
    backward: Verdict
    forward_report: DirectionReport
    backward_report: DirectionReport | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def escaping(self) -> bool:
        return Verdict.ESCAPING in (self.forward, self.backward)


def _default_t_max(sys: FlowSystem) -> float:
    return 2048 if sys.discrete else 50.0


def classify_orbit(orbit: Orbit, exh: CompactExhaustion, t_max: float,
                   tail_fraction: float = 0.5) -> DirectionReport:
    """Verdict for one sampled direction of an orbit (times may be negative)."""
    t_abs = np.abs(orbit.times)
    tail_start = tail_fraction * abs(t_max)
    if orbit.truncated:
        return DirectionReport(Verdict.INCONCLUSIVE, note="symbolic horizon exhausted")
    mem = exh.membership(orbit.states)
    blow = orbit.blowup_time
    if blow is None and (len(t_abs) == 0 or t_abs[-1] < abs(t_max) * (1 - 1e-9)):
        return DirectionReport(Verdict.INCONCLUSIVE, note="orbit shorter than horizon")
    witnesses = []
    reentered = False
    for m in range(exh.max_level):
        inside = np.flatnonzero(mem[m])
        if inside.size and t_abs[inside[-1]] >= tail_start:
            tail_hits = inside[t_abs[inside] >= tail_start]
            witnesses.append(LevelWitness(m + 1, None, float(orbit.times[tail_hits[0]])))
            reentered = True
        elif blow is not None:
            witnesses.append(LevelWitness(m + 1, float(blow), None))
        elif inside.size:
            last = inside[-1]
            nxt = min(last + 1, len(t_abs) - 1)
            witnesses.append(LevelWitness(m + 1, float(orbit.times[nxt]), None))
        else:
            witnesses.append(LevelWitness(m + 1, 0.0, None))
    if reentered:
        return DirectionReport(Verdict.NON_ESCAPING, tuple(witnesses), blow)
    if blow is None and not mem[-1].any():
        return DirectionReport(Verdict.INCONCLUSIVE, tuple(witnesses), blow,
                               note="orbit never entered the largest exhaustion level")
    return DirectionReport(Verdict.ESCAPING, tuple(witnesses), blow)


def classify_escape_many(sys: FlowSystem, points: Sequence, exh: CompactExhaustion,
                         t_max: float | None = None, *, dt: float | None = None,
                         tail_fraction: float = 0.5, backward: bool | None = None) -> list[EscapeVerdict]:
    t_max = abs(t_max or _default_t_max(sys))
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if exh.symbolic != sys.symbolic:
        raise ValueError("exhaustion family does not match the phase space")
    backward = sys.invertible if backward is None else backward and sys.invertible
    fwd = sys.orbits(points, t_max, dt)
    bwd = sys.orbits(points, -t_max, dt) if backward else [None] * len(fwd)
    out = []
    for of, ob in zip(fwd, bwd):
        rf = classify_orbit(of, exh, t_max, tail_fraction)
        rb = classify_orbit(ob, exh, t_max, tail_fraction) if ob is not None else None
        out.append(EscapeVerdict(rf.verdict, rb.verdict if rb else Verdict.NOT_APPLICABLE, rf, rb,
                                 {"t_max": t_max, "tail_fraction": tail_fraction,
                                  "dt": dt or sys.default_dt}))
    return out


def classify_escape(sys: FlowSystem, x, exh: CompactExhaustion, t_max: float | None = None, **kw) -> EscapeVerdict:
    """Forward (and, for invertible systems, backward) escape verdict for one point."""
    return classify_escape_many(sys, [x], exh, t_max, **kw)[0]


def subsequence_certificate(sys: FlowSystem, x: SymbolicPoint, times: Sequence[int],
                            target: SymbolicPoint) -> list[int]:
    """Prefix-agreement lengths of ``Phi^{n_j}(x)`` with ``target`` along ``times``.

    Growing agreement exhibits a subsequence converging to ``target`` in the
    product topology, which certifies non-escape.
    """
    lengths = []
    for n in times:
        img = sys.evaluate(x, int(n))
        lengths.append(img.agreement_length(target))
    return lengths


# ------------------------------------------------------------ limit sets


@dataclass
class LimitSetEstimate:
    """Greedy ε-clusters of the tail samples of an orbit."""

    centers: list
    eps: float
    window: tuple[float, float]
    counts: tuple[int, ...] = ()
    unclustered: int = 0
    diverged: bool = False

    @property
    def empty(self) -> bool:
        return not self.centers

    def __len__(self):
        return len(self.centers)

    @property
    def array(self) -> np.ndarray:
        if not self.centers or isinstance(self.centers[0], SymbolicPoint):
            return np.empty((0, 0))
        return np.asarray(self.centers, dtype=float)

    def distance_to(self, z) -> float:
        if not self.centers:
            return math.inf
        if isinstance(self.centers[0], SymbolicPoint):
            return min(distance(c, z) for c in self.centers)
        z = np.asarray(z, dtype=float)
        return float(np.sqrt(((self.array - z) ** 2).sum(axis=1)).min())

    def near(self, z, tol: float) -> bool:
        return self.distance_to(z) <= tol


def greedy_clusters(samples, eps: float):
    """First-fit clustering in sample order: ``(center_indices, labels)``."""
    if len(samples) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    if isinstance(samples[0], SymbolicPoint):
        centers: list[int] = []
        labels = np.empty(len(samples), dtype=np.int64)
        for i, s in enumerate(samples):
            for c, ci in enumerate(centers):
                if distance(samples[ci], s) <= eps:
                    labels[i] = c
                    break
            else:
                labels[i] = len(centers)
                centers.append(i)
        return np.asarray(centers, dtype=np.int64), labels
    return _kernels.greedy_cluster(np.ascontiguousarray(samples, dtype=float), float(eps))


def estimate_from_orbit(orbit: Orbit, t_tail: float, t_max: float, eps: float,
                        exh: CompactExhaustion | None = None, min_visits: int = 1) -> LimitSetEstimate:
    window = (float(t_tail), float(t_max))
    if orbit.blowup_time is not None:
        return LimitSetEstimate([], eps, window, diverged=True)
    t_abs = np.abs(orbit.times)
    sel = np.flatnonzero((t_abs >= abs(t_tail) - 1e-12) & (t_abs <= abs(t_max) + 1e-12))
    if isinstance(orbit.states, list):
        tail = [orbit.states[i] for i in sel]
    else:
        tail = orbit.states[sel]
    unclustered = 0
    if exh is not None and len(tail):
        keep = exh.membership(tail)[-1]
        unclustered = int((~keep).sum())
        tail = [s for s, k in zip(tail, keep) if k] if isinstance(tail, list) else tail[keep]
    centers_idx, labels = greedy_clusters(tail, eps)
    counts = np.bincount(labels, minlength=len(centers_idx)) if len(labels) else np.zeros(0, int)
    good = [c for c in range(len(centers_idx)) if counts[c] >= min_visits]
    centers = [tail[centers_idx[c]] for c in good]
    if not isinstance(tail, list):
        centers = [np.asarray(c) for c in centers]
    return LimitSetEstimate(centers, eps, window, tuple(int(counts[c]) for c in good), unclustered)


def estimate_omega(sys: FlowSystem, x, t_tail: float, t_max: float, eps: float = 1e-3, *,
                   exh: CompactExhaustion | None = None, dt: float | None = None,
                   min_visits: int = 1) -> LimitSetEstimate:
    """ε-clusters of forward orbit samples in ``[t_tail, t_max]``.

    Samples outside the largest exhaustion level are not clustered (counted
    in ``unclustered``); a diverged orbit gives an empty estimate.
    """
    if not 0 <= t_tail < t_max:
        raise ValueError("need 0 <= t_tail < t_max")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return estimate_from_orbit(sys.orbit(x, t_max, dt), t_tail, t_max, eps, exh, min_visits)


def estimate_alpha(sys: FlowSystem, x, t_tail: float, t_max: float, eps: float = 1e-3, *,
                   exh: CompactExhaustion | None = None, dt: float | None = None,
                   min_visits: int = 1) -> LimitSetEstimate:
    """Backward-time analogue of :func:`estimate_omega`."""
    if not sys.invertible:
        raise ValueError(f"{sys.name} is not invertible")
    if not 0 <= t_tail < t_max:
        raise ValueError("need 0 <= t_tail < t_max")
    est = estimate_from_orbit(sys.orbit(x, -t_max, dt), t_tail, t_max, eps, exh, min_visits)
    est.window = (-float(t_tail), -float(t_max))
    return est


# -------------------------------------------------------- property checks


@dataclass(frozen=True)
class AnalysisParams:
    t_max: float | None = None
    dt: float | None = None
    tail_fraction: float = 0.5
    eps: float = 1e-3

    def resolved(self, sys: FlowSystem) -> "AnalysisParams":
        return AnalysisParams(self.t_max or _default_t_max(sys), self.dt or sys.default_dt,
                              self.tail_fraction, self.eps)

    def to_dict(self) -> dict:
        return {"t_max": self.t_max, "dt": self.dt, "tail_fraction": self.tail_fraction, "eps": self.eps}


@dataclass
class DualityResult:
    outcome: Outcome
    forward: tuple[Verdict, bool]  # verdict, omega empty
    backward: tuple[Verdict, bool] | None


def check_omega_escape_duality(sys: FlowSystem, x, exh: CompactExhaustion,
                               params: AnalysisParams = AnalysisParams()) -> DualityResult:
    """ω(x) empty ⟺ forward escaping, and α(x) empty ⟺ backward escaping."""
    p = params.resolved(sys)
    verdict = classify_escape(sys, x, exh, p.t_max, dt=p.dt, tail_fraction=p.tail_fraction)
    t_tail = p.tail_fraction * p.t_max
    om = estimate_omega(sys, x, t_tail, p.t_max, p.eps, exh=exh, dt=p.dt)
    fwd = (verdict.forward, om.empty)
    bwd = None
    if sys.invertible:
        al = estimate_alpha(sys, x, t_tail, p.t_max, p.eps, exh=exh, dt=p.dt)
        bwd = (verdict.backward, al.empty)
    outcomes = []
    for v, empty in filter(None, [fwd, bwd]):
        if v is Verdict.INCONCLUSIVE:
            outcomes.append(Outcome.SKIP)
        else:
            outcomes.append(Outcome.PASS if (v is Verdict.ESCAPING) == empty else Outcome.FAIL)
    if Outcome.FAIL in outcomes:
        res = Outcome.FAIL
    elif Outcome.PASS in outcomes:
        res = Outcome.PASS
    else:
        res = Outcome.SKIP
    return DualityResult(res, fwd, bwd)


@dataclass
class ConjugacyReport:
    outcome: Outcome
    samples: int
    max_inverse_residual: float
    max_conjugacy_residual: float
    pairs: list = field(default_factory=list)  # (x, verdict under A, verdict of h(x) under B)
    mismatches: list = field(default_factory=list)
    omega_clusters: int = 0  # clusters transported
    omega_misses: list = field(default_factory=list)  # (x, offending cluster or None for empty-vs-nonempty)


def local_lipschitz(h: CustomMap, z, radius: float):
    """Largest difference quotient of ``h`` over the 2n axis steps of size
    ``radius`` at ``z``; vectorized over a batch of points."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    base = h(z)
    best = np.zeros(len(z))
    for i in range(z.shape[1]):
        for s in (-1.0, 1.0):
            u = z.copy()
            u[:, i] += s * radius
            best = np.maximum(best, np.sqrt(((h(u) - base) ** 2).sum(axis=1)) / radius)
    return float(best[0]) if single else best


def _nearest_distances(points: np.ndarray, centers: np.ndarray, chunk: int = 512) -> np.ndarray:
    out = np.full(len(points), np.inf)
    if len(centers) == 0:
        return out
    for a in range(0, len(points), chunk):
        p = points[a:a + chunk]
        out[a:a + chunk] = np.sqrt(((p[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
    return out


def _scaled_residual(a: np.ndarray, b: np.ndarray) -> float:
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)).max(axis=1))
    return float((np.sqrt(((a - b) ** 2).sum(axis=1)) / scale).max())


def check_conjugacy_transport(sys_a: FlowSystem, sys_b: FlowSystem, h: CustomMap, samples: Sequence,
                              exh: CompactExhaustion, params: AnalysisParams = AnalysisParams(),
                              residual_times: Sequence[float] = (0.5, 1.0, 2.0),
                              inverse_tol: float = 1e-9, conj_tol: float = 1e-6,
                              transport_omega: bool = True) -> ConjugacyReport:
    """Escape verdicts of ``x`` under A and ``h(x)`` under B must agree.

    ``h`` must carry its inverse. B is classified against the image
    exhaustion ``h(K_m)``. Residuals are measured relative to
    ``max(1, |value|)``. With ``transport_omega`` every ω-cluster ``z`` of x
    must have ``h(z)`` within ``2ε·max(1, L)`` of the ω-estimate of ``h(x)``,
    L being the local Lipschitz constant of h at z.
    """
    if not h.has_inverse:
        raise NotAConjugacy("conjugacy map needs an explicit inverse")
    xs = np.array([as_point(s).array for s in samples])
    inv_res = max(_scaled_residual(h(h.inverse(xs)), xs), _scaled_residual(h.inverse(h(xs)), xs))
    if inv_res > inverse_tol:
        raise NotAConjugacy(f"h o h^-1 differs from identity by {inv_res:.3g}")
    conj_res = 0.0
    for x in xs:
        for t in residual_times:
            ts = [t, -t] if sys_a.invertible and sys_b.invertible else [t]
            for tt in ts:
                if sys_a.discrete:
                    tt = int(round(tt)) or 1
                try:
                    lhs = sys_b.evaluate(h(x), tt).array
                    rhs = h(sys_a.evaluate(x, tt).array)
                except Diverged:
                    continue
                conj_res = max(conj_res, _scaled_residual(lhs, rhs))
    if conj_res > conj_tol:
        raise NotAConjugacy(f"conjugacy residual {conj_res:.3g} exceeds {conj_tol:g}")
    p = params.resolved(sys_a)
    image = image_exhaustion(exh, h.inverse, h.name)
    va = classify_escape_many(sys_a, list(xs), exh, p.t_max, dt=p.dt, tail_fraction=p.tail_fraction)
    vb = classify_escape_many(sys_b, list(h(xs)), image, p.t_max, dt=p.dt, tail_fraction=p.tail_fraction)
    pairs, mismatches = [], []
    for x, a, b in zip(xs, va, vb):
        pair = (tuple(x), (a.forward, a.backward), (b.forward, b.backward))
        pairs.append(pair)
        if pair[1] != pair[2]:
            mismatches.append(pair)
    n_clusters, misses = 0, []
    if transport_omega:
        t_tail = p.tail_fraction * p.t_max
        for x in xs:
            ea = estimate_omega(sys_a, x, t_tail, p.t_max, p.eps, exh=exh, dt=p.dt)
            eb = estimate_omega(sys_b, h(x), t_tail, p.t_max, p.eps, exh=image, dt=p.dt)
            if ea.empty != eb.empty:
                misses.append((tuple(x), None))
            if ea.empty:
                continue
            Z = ea.array
            n_clusters += len(Z)
            delta = 2 * p.eps * np.maximum(1.0, local_lipschitz(h, Z, p.eps))
            far = _nearest_distances(h(Z), eb.array) > delta
            misses.extend((tuple(x), tuple(z)) for z in Z[far])
    failed = bool(mismatches or misses)
    return ConjugacyReport(Outcome.FAIL if failed else Outcome.PASS, len(xs), inv_res, conj_res,
                           pairs, mismatches, n_clusters, misses)


def check_minimal_orbit(sys: FlowSystem, x, exh: CompactExhaustion, params: AnalysisParams = AnalysisParams(),
                        n_probe: int = 8) -> Outcome:
    """If x escapes in both time directions its orbit should be minimal.

    Operationally: every probed orbit point must itself escape both ways,
    so the sampled orbit closure has no proper closed invariant piece.
    """
    if not sys.invertible:
        raise ValueError(f"{sys.name} is not invertible")
    p = params.resolved(sys)
    v = classify_escape(sys, x, exh, p.t_max, dt=p.dt, tail_fraction=p.tail_fraction)
    if not (v.forward is Verdict.ESCAPING and v.backward is Verdict.ESCAPING):
        return Outcome.SKIP
    span = 0.5 * p.tail_fraction * p.t_max
    for t in np.linspace(-span, span, n_probe):
        if sys.discrete:
            t = int(round(t))
        try:
            probe = sys.evaluate(x, t)
        except Diverged:
            continue
        if not exh.top.contains(probe):
            continue
        # the probe sits |t| further along, so give it |t| more on each side of the tail
        q = classify_escape(sys, probe, exh, p.t_max + 2 * abs(t), dt=p.dt,
                            tail_fraction=(p.tail_fraction * p.t_max + abs(t)) / (p.t_max + 2 * abs(t)))
        if not (q.forward is Verdict.ESCAPING and q.backward is Verdict.ESCAPING):
            return Outcome.FAIL
    return Outcome.PASS
