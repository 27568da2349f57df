"""Property suites over the reference corpora.

Each suite returns a :class:`SuiteResult`: one row per checked case with an
:class:`Outcome` and plain-data details, so the CLI can write it as CSV/JSON
and tests can assert on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import corpus
from .escape_analysis import (
    AnalysisParams,
    Outcome,
    Verdict,
    check_conjugacy_transport,
    check_minimal_orbit,
    check_omega_escape_duality,
    classify_escape,
    classify_escape_many,
    subsequence_certificate,
)
from .expressions import identity_map
from .flows import R3Saddle, Shift, Spiral, Translation, example_shift_points, spiral_blowup_time
from .hyperspace import FiniteCompact, check_hyperspace_escape_equivalence, hausdorff_distance
from .phase_space import ball_exhaustion, constant_sequence, cylinder_exhaustion
from .semigroup import (
    SemigroupParams,
    check_omega_invariance,
    check_recurrence_invariance,
    check_semigroup_conjugacy,
    classify_escape_G,
    recurrence_evidence,
)


@dataclass
class SuiteResult:
    name: str
    rows: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def add(self, label: str, outcome: Outcome, **detail):
        self.rows.append({"label": label, "outcome": Outcome(outcome), **detail})

    def counts(self) -> dict:
        c = {o.value: 0 for o in Outcome}
        for r in self.rows:
            c[r["outcome"].value] += 1
        return c

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r["outcome"] is Outcome.FAIL]


def _ok(flag: bool) -> Outcome:
    return Outcome.PASS if flag else Outcome.FAIL


def _r3saddle_offaxis(rng: np.random.Generator, n: int) -> np.ndarray:
    """Points with x²+y² in [0.01, 4] and |z| <= 1."""
    rho = np.sqrt(rng.uniform(0.01, 4.0, n))
    phi = rng.uniform(0.0, 2 * math.pi, n)
    z = rng.uniform(-1.0, 1.0, n)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def escaping_sets(seed: int = 0, n_points: int = 100, n_offaxis: int = 50, spiral_t_max: float = 50.0,
                  r3saddle_t_max: float = 100.0, max_level: int = 10) -> SuiteResult:
    """Sampled points classify according to the three closed-form escaping sets."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("escaping-sets", params={"seed": seed, "n_points": n_points, "n_offaxis": n_offaxis,
                                               "spiral_t_max": spiral_t_max, "r3saddle_t_max": r3saddle_t_max,
                                               "max_level": max_level})
    # spiral: backward escaping iff r0 > 1, never forward escaping
    r0 = rng.uniform(0.0, 3.0, n_points)
    r0 = np.where(np.abs(r0 - 1.0) < 1e-6, 1.5, np.where(r0 == 0.0, 3.0, r0))
    th = rng.uniform(0.0, 2 * math.pi, n_points)
    pts = [Spiral.point(r, t) for r, t in zip(r0, th)]
    verdicts = classify_escape_many(Spiral(), pts, ball_exhaustion(2, max_level), spiral_t_max)
    for r, t, v in zip(r0, th, verdicts):
        want = Verdict.ESCAPING if r > 1 else Verdict.NON_ESCAPING
        res.add(f"spiral r0={r:.6f} theta={t:.6f}", _ok(v.backward is want and v.forward is Verdict.NON_ESCAPING),
                system="spiral", forward=v.forward.value, backward=v.backward.value, expected_backward=want.value)
    # translation: every point escapes both ways
    tp = rng.uniform(-5.0, 5.0, (n_points, 2))  # inside the largest level
    for p, v in zip(tp, classify_escape_many(Translation([1.0, 0.0]), list(tp), ball_exhaustion(2, max_level), 50.0)):
        res.add(f"translation ({p[0]:.6f},{p[1]:.6f})",
                _ok(v.forward is Verdict.ESCAPING and v.backward is Verdict.ESCAPING),
                system="translation", forward=v.forward.value, backward=v.backward.value)
    # r3saddle: forward escaping exactly on the z-axis
    axis = np.array([[0.0, 0.0, z] for z in (-2.0, 0.0, 2.0)])
    off = _r3saddle_offaxis(rng, n_offaxis)
    allp = np.concatenate([axis, off])
    vs = classify_escape_many(R3Saddle(), list(allp), ball_exhaustion(3, max_level), r3saddle_t_max)
    for k, (p, v) in enumerate(zip(allp, vs)):
        want = Verdict.ESCAPING if k < len(axis) else Verdict.NON_ESCAPING
        res.add(f"r3saddle ({p[0]:.6f},{p[1]:.6f},{p[2]:.6f})", _ok(v.forward is want),
                system="r3saddle", forward=v.forward.value, expected_forward=want.value)
    return res


def spiral_blowup(radii=(1.5, 2.0, 3.0), tol: float = 1e-6) -> SuiteResult:
    res = SuiteResult("spiral-blowup", params={"radii": list(radii), "tol": tol})
    for r0 in radii:
        v = classify_escape(Spiral(), Spiral.point(r0), ball_exhaustion(2), 50.0)
        want = 0.5 * math.log(1.0 - 1.0 / r0**2)
        got = v.backward_report.blowup_time
        err = abs(got - want) if got is not None else math.inf
        res.add(f"spiral r0={r0:g}", _ok(err <= tol), blowup=got, closed_form=want, error=err)
    return res


def shift_examples(j_max: int = 16, horizon: int | None = None) -> SuiteResult:
    """The two symbolic points: x re-enters (certified by prefix agreement with all-ones), y escapes."""
    horizon = horizon or 2 ** (j_max + 4)
    px, py = example_shift_points(horizon)
    ones = constant_sequence(1, horizon)
    res = SuiteResult("shift-examples", params={"j_max": j_max, "horizon": horizon,
                                                "exhaustion": cylinder_exhaustion().describe()})
    lengths = subsequence_certificate(Shift(), px, [2**j for j in range(1, j_max + 1)], ones)
    for j, L in zip(range(1, j_max + 1), lengths):
        res.add(f"x shifted by 2^{j} agrees with all-ones", _ok(L >= j), agreement=int(L), required=j)
    exh = cylinder_exhaustion()
    vx = classify_escape(Shift(), px, exh)
    vy = classify_escape(Shift(), py, exh)
    res.add("x non-escaping", _ok(vx.forward is Verdict.NON_ESCAPING), verdict=vx.forward.value)
    res.add("y escaping", _ok(vy.forward is Verdict.ESCAPING), verdict=vy.forward.value,
            exit_times=vy.forward_report.exit_times)
    return res


def duality() -> SuiteResult:
    res = SuiteResult("duality")
    for case in corpus.duality_corpus():
        r = check_omega_escape_duality(case.system, case.point, case.exhaustion, case.params)
        res.add(case.label, r.outcome, system=case.system.name,
                forward=[r.forward[0].value, r.forward[1]],
                backward=[r.backward[0].value, r.backward[1]] if r.backward else None,
                params=case.params.resolved(case.system).to_dict())
    return res


def hyperspace() -> SuiteResult:
    """P1/P3/P4 must agree on resolved pairs, and mixed sets must resolve to all-false."""
    res = SuiteResult("hyperspace")
    for case in corpus.hyperspace_corpus():
        r = check_hyperspace_escape_equivalence(case.system, case.set, case.exhaustion, case.params)
        outcome = r.outcome
        if outcome is Outcome.PASS and r.p1_all_escape != case.expected:
            outcome = Outcome.FAIL
        res.add(case.label, outcome, system=case.system.name, size=len(case.set), p1=r.p1_all_escape,
                p3=r.p3_limsup_empty, p4=r.p4_hyperspace_escape, expected=case.expected, params=case.params.to_dict())
    return res


def hausdorff(seed: int = 0, n_pairs: int = 1000, max_size: int = 8, bound: float = 10.0, dim: int = 2) -> SuiteResult:
    """Metric axioms of the brute-force Hausdorff distance, checked exactly."""
    rng = np.random.default_rng(seed)

    def draw():
        return FiniteCompact(rng.uniform(-bound, bound, (int(rng.integers(1, max_size + 1)), dim)))

    bad = {"identity": 0, "symmetry": 0, "positivity": 0, "triangle": 0}
    for _ in range(n_pairs):
        a, b, c = draw(), draw(), draw()
        ab, ba = hausdorff_distance(a, b), hausdorff_distance(b, a)
        bad["identity"] += hausdorff_distance(a, a) != 0.0
        bad["symmetry"] += ab != ba
        same = len(a) == len(b) and a.issubset(b) and b.issubset(a)
        bad["positivity"] += (ab > 0.0) == same
        bad["triangle"] += hausdorff_distance(a, c) > ab + hausdorff_distance(b, c)
    res = SuiteResult("hausdorff", params={"seed": seed, "n_pairs": n_pairs, "max_size": max_size,
                                           "bound": bound, "dim": dim})
    for axiom, n in bad.items():
        res.add(axiom, _ok(n == 0), checked=n_pairs, violations=n)
    return res


def semigroup_invariance(seed: int = 0, budget: int = 20_000, recurrence_eps: float = 1e-3,
                         recurrence_budget: int = 100_000) -> SuiteResult:
    """ω(x), Rec(G) (abelian G) and Esc(G) invariance on the semigroup corpus,
    plus recurrence of the golden rotation at fine resolution."""
    params = SemigroupParams(budget=budget, eps=1e-2, seeds=tuple(range(seed, seed + 8)))
    res = SuiteResult("semigroup-invariance", params=params.to_dict())
    for case in corpus.semigroup_corpus():
        G = case.generators
        exh = ball_exhaustion(G.dim)
        for x in case.points:
            tag = f"{case.label} x={x}"
            res.add(f"{tag} omega invariant", _ok(check_omega_invariance(G, x, params)))
            rec = check_recurrence_invariance(G, x, params)
            res.add(f"{tag} recurrence invariant", rec, abelian=G.abelian)
            esc = classify_escape_G(G, x, exh, params)
            res.add(f"{tag} escape invariant", _ok(esc.invariance_ok), verdict=esc.verdict.value,
                    companions={k: v.value for k, v in esc.companions.items()})
    rot = corpus.semigroup_corpus()[5].generators
    fine = SemigroupParams(eps=recurrence_eps, budget=recurrence_budget, seeds=params.seeds)
    ev = recurrence_evidence(rot, [1.0, 0.0], fine)
    res.add(f"golden rotation recurrence eps={recurrence_eps:g}", _ok(ev.recurrent and ev.applications <= recurrence_budget),
            visits=ev.visits, min_distance=ev.min_distance, applications=ev.applications)
    return res


def conjugacy(seed: int = 0, budget: int = 20_000) -> SuiteResult:
    """Transport along explicit conjugacies, and the identity self-test on every corpus system."""
    res = SuiteResult("conjugacy")
    for case in corpus.flow_conjugacy_corpus():
        r = check_conjugacy_transport(case.source, case.target, case.h, case.samples, case.exhaustion)
        res.add(case.label, r.outcome, clusters=r.omega_clusters, omega_misses=len(r.omega_misses),
                verdict_mismatches=len(r.mismatches), conjugacy_residual=r.max_conjugacy_residual)
    params = SemigroupParams(budget=budget, eps=1e-2, seeds=tuple(range(seed, seed + 8)))
    for case in corpus.semigroup_conjugacy_corpus():
        r = check_semigroup_conjugacy(case.source, case.target, case.rho, case.samples, case.exhaustion, params)
        res.add(case.label, r.outcome, residual=r.max_residual, rows=r.rows)
    for name, sys, pts in corpus.identity_systems():
        exh = corpus.default_exhaustion(sys)
        if sys.symbolic:
            # no expression map acts on sequences; identity transport is verdict equality
            a = classify_escape_many(sys, pts, exh, None)
            b = classify_escape_many(sys, pts, exh, None)
            same = all((u.forward, u.backward) == (v.forward, v.backward) for u, v in zip(a, b))
            res.add(f"identity {name}", _ok(same))
            continue
        r = check_conjugacy_transport(sys, sys, identity_map(sys.dim), pts, exh)
        res.add(f"identity {name}", r.outcome, clusters=r.omega_clusters)
    for case in corpus.semigroup_corpus():
        G = case.generators
        r = check_semigroup_conjugacy(G, G, identity_map(G.dim), case.points, ball_exhaustion(G.dim), params)
        res.add(f"identity {case.label}", r.outcome)
    return res


def minimal_orbit() -> SuiteResult:
    res = SuiteResult("minimal-orbit")
    cases = [("translation (0,0)", Translation([1.0, 0.0]), (0.0, 0.0), Outcome.PASS),
             ("r3saddle (0,0,0)", R3Saddle(), (0.0, 0.0, 0.0), Outcome.PASS),
             ("spiral r0=2", Spiral(), Spiral.point(2.0), Outcome.SKIP)]
    for label, sys, x, want in cases:
        got = check_minimal_orbit(sys, x, ball_exhaustion(sys.dim), AnalysisParams())
        res.add(label, got if got is Outcome.FAIL else _ok(got is want), result=got.value, expected=want.value)
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "escaping-sets": escaping_sets,
    "spiral-blowup": spiral_blowup,
    "shift-examples": shift_examples,
    "duality": duality,
    "hyperspace": hyperspace,
    "hausdorff": hausdorff,
    "semigroup-invariance": semigroup_invariance,
    "conjugacy": conjugacy,
    "minimal-orbit": minimal_orbit,
}
SEEDED = {"escaping-sets", "hausdorff", "semigroup-invariance", "conjugacy"}
