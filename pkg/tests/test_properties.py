"""Property-based checks of the invariants each module promises."""

import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from escapeset.corpus import GOLDEN_ANGLE, rotation_map
from escapeset.escape_analysis import Verdict, classify_escape, estimate_omega
from escapeset.expressions import CustomMap
from escapeset.flows import MapSystem, R3Saddle, Shift, Spiral, Translation, spiral_blowup_time
from escapeset.hyperspace import FiniteCompact, estimate_omega_K, hausdorff_distance, induced_map
from escapeset.phase_space import SymbolicPoint, ball_exhaustion, cylinder_exhaustion, distance
from escapeset.semigroup import (
    GeneratorSet,
    SemigroupParams,
    UnboundedSequenceSpec,
    apply_word,
    estimate_omega_G,
    run_sequence,
)

coord = st.floats(-10, 10, allow_nan=False, width=64)
vec2 = st.tuples(coord, coord)


def finite_sets(dim=2, max_size=8):
    return st.integers(1, max_size).flatmap(
        lambda n: arrays(np.float64, (n, dim), elements=coord)).map(FiniteCompact)


@st.composite
def sequences(draw, horizon=48):
    head = np.array(draw(st.lists(st.integers(1, 4), min_size=1, max_size=horizon)), dtype=np.int64)
    tail = draw(st.integers(1, 4))
    return SymbolicPoint(lambda i: np.where(i <= len(head), head[np.minimum(i, len(head)) - 1], tail), horizon)


# ------------------------------------------------------------ phase space


@given(vec2, vec2, vec2)
def test_euclidean_metric_axioms(a, b, c):
    dab, dba = distance(a, b), distance(b, a)
    assert dab == dba and dab >= 0
    assert distance(a, a) == 0
    assert dab <= distance(a, c) + distance(c, b) + 1e-12


@given(sequences(), sequences(), sequences())
def test_symbolic_metric_axioms(s, t, u):
    dst = distance(s, t)
    assert dst == distance(t, s)
    assert distance(s, s) == 0.0
    assert 0.0 <= dst <= 1.0
    assert dst <= distance(s, u) + distance(u, t)
    assert (dst == 0.0) == bool((s.prefix(48) == t.prefix(48)).all())


@given(vec2)
def test_ball_exhaustion_is_nested(p):
    exh = ball_exhaustion(2, 10)
    mem = exh.membership(np.array([p]))[:, 0]
    assert all(not mem[m] or mem[m + 1] for m in range(9))


@given(sequences())
def test_cylinder_exhaustion_is_nested(s):
    exh = cylinder_exhaustion(6, horizon=48)
    inside = [lvl.contains(s) for lvl in exh.levels]
    assert all(not inside[m] or inside[m + 1] for m in range(5))


# ------------------------------------------------------------------ flows


@given(vec2)
def test_identity_at_time_zero(p):
    for sys, x in ((Translation([1.0, 0.0]), p), (Spiral(), p), (R3Saddle(), (*p, 0.5))):
        assert distance(sys.evaluate(x, 0), x) == 0.0


@given(st.floats(0.05, 3.0), st.floats(-math.pi, math.pi), st.floats(-3.0, 3.0))
def test_spiral_round_trip(r0, th, t):
    x = Spiral.point(r0, th)
    tstar = spiral_blowup_time(r0)
    assume(tstar is None or min(t, 0.0) > tstar + 1e-3)
    assume(tstar is None or -t > tstar + 1e-3 or t >= 0)
    y = Spiral().evaluate(x, t)
    assume(tstar is None or t < 0 or True)
    back = Spiral().evaluate(y, -t)
    assert distance(back, x) <= 1e-12 * max(1.0, r0 * math.exp(abs(t)))


@given(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)), st.floats(0.1, 1.0))
def test_r3saddle_round_trip(x, t):
    sys = R3Saddle()
    assert distance(sys.evaluate(sys.evaluate(x, t), -t), x) <= 1e-6


@given(sequences(horizon=200), st.integers(0, 60), st.integers(0, 60))
def test_shift_semigroup_law(s, n, m):
    sh = Shift()
    a = sh.evaluate(sh.evaluate(s, n), m)
    b = sh.evaluate(s, n + m)
    assert (a.prefix(a.horizon) == b.prefix(b.horizon)).all()


# ---------------------------------------------------------- escape analysis


@given(st.floats(0.1, 3.0).filter(lambda r: abs(r - 1) > 1e-3), st.floats(-3, 3))
def test_longer_horizon_never_unescapes_spiral(r0, th):
    exh = ball_exhaustion(2, 10)
    short = classify_escape(Spiral(), Spiral.point(r0, th), exh, 20)
    long = classify_escape(Spiral(), Spiral.point(r0, th), exh, 60)
    for a, b in ((short.forward, long.forward), (short.backward, long.backward)):
        assert not (a is Verdict.ESCAPING and b is Verdict.NON_ESCAPING)


@given(vec2)
def test_larger_exhaustion_never_unescapes_translation(p):
    p = (p[0] / 2, p[1] / 2)
    a = classify_escape(Translation([1.0, 0.0]), p, ball_exhaustion(2, 10))
    b = classify_escape(Translation([1.0, 0.0]), p, ball_exhaustion(2, 20))
    assert not (a.forward is Verdict.ESCAPING and b.forward is Verdict.NON_ESCAPING)


@given(st.floats(0.2, 2.5), st.floats(0.02, 0.2))
def test_halving_eps_keeps_heavy_clusters(r0, eps):
    x = Spiral.point(r0)
    coarse = estimate_omega(Spiral(), x, 25.0, 50.0, eps)
    fine = estimate_omega(Spiral(), x, 25.0, 50.0, eps / 2)
    for c, n in zip(coarse.centers, coarse.counts):
        if n >= 10:
            assert fine.near(c, eps)


# ---------------------------------------------------------------- hyperspace


@given(finite_sets(), finite_sets(), finite_sets())
def test_hausdorff_metric_axioms(a, b, c):
    dab = hausdorff_distance(a, b)
    assert dab == hausdorff_distance(b, a)
    assert hausdorff_distance(a, a) == 0.0
    assert (dab == 0.0) == (a.issubset(b) and b.issubset(a))
    assert dab <= hausdorff_distance(a, c) + hausdorff_distance(c, b) + 1e-12


@given(finite_sets(), st.floats(-5, 5))
def test_induced_map_is_monotone(a, t):
    extra = np.vstack([a.points, a.points[:1] + 1.0])
    b = FiniteCompact(extra)
    for sys in (Translation([1.0, 0.0]), Spiral()):
        try:
            ia, ib = induced_map(sys, a, t), induced_map(sys, b, t)
        except Exception:
            continue  # blowup of some point
        assert ia.issubset(ib)


@given(st.floats(0.2, 2.5), st.floats(-3, 3))
def test_singleton_omega_K_matches_point_omega(r0, th):
    x = Spiral.point(r0, th)
    K = estimate_omega_K(Spiral(), FiniteCompact(np.array([x.coords])), (100, 400), eps=0.1, min_visits=3)
    P = estimate_omega(Spiral(), x, 100.0, 400.0, 0.1, dt=1.0, min_visits=3)
    assert len(K) == len(P)
    for c in K.centers:
        assert P.near(c, 0.1)


# ---------------------------------------------------------------- semigroups


gens = st.sampled_from([{"a": "x/2"}, {"a": "x/2", "b": "x/3"}, {"a": "x+1", "b": "2*x"},
                        {"a": "x+1", "b": "x+2", "c": "-x/2"}])


@given(gens, st.integers(0, 2), st.sampled_from(["k", "2k", "2^k"]), st.integers(0, 3), st.integers(0, 99),
       st.integers(1, 6))
def test_word_bookkeeping(g, alpha, sched, L, seed, k):
    G = GeneratorSet.from_expressions(g)
    assume(alpha < G.m)
    spec = UnboundedSequenceSpec(alpha, sched, L, seed)
    w = spec.term_word(G, k)
    assert w.counts(G.m)[alpha] == spec.n(k)
    run = run_sequence(G, [0.25], spec, max(k, 2), 10_000)
    assert run.n_terms == max(k, 2)
    assert tuple(run.counts[k - 1]) == w.counts(G.m)
    assert apply_word(G, w, [0.25])[0] == run.values[k - 1][0]


@given(st.lists(st.integers(1, 50), min_size=2, max_size=20, unique=True).map(sorted))
def test_explicit_schedules_must_be_unbounded(ns):
    ok = all(n >= k for k, n in enumerate(ns, start=1))
    try:
        UnboundedSequenceSpec(0, tuple(ns))
        built = True
    except ValueError:
        built = False
    assert built == ok


maps = st.sampled_from([("x/2", ["x"], [1.0]), ("-x/2 + 1", ["x"], [3.0]), ("x/3 - 2", ["x"], [-1.0])])


@given(maps, st.integers(200, 3000))
def test_single_generator_matches_discrete_flow(m, budget):
    expr, variables, x = m
    G = GeneratorSet.from_expressions({"g": expr}, variables)
    params = SemigroupParams(budget=budget, schedules=("k",), filler_lengths=(0,), eps=1e-3)
    est_G = estimate_omega_G(G, x, params)
    K = budget
    start = int(math.floor(K * params.tail_fraction)) + 1
    est_f = estimate_omega(MapSystem(CustomMap([expr], variables)), x, start, K, params.eps, min_visits=params.m_min)
    assert len(est_G) == len(est_f)
    for c in est_G.centers:
        assert est_f.near(c, params.eps)


def test_single_rotation_matches_discrete_flow():
    rot = rotation_map(GOLDEN_ANGLE)
    G = GeneratorSet((rot,), ("rot",))
    params = SemigroupParams(budget=4000, schedules=("k",), filler_lengths=(0,), eps=0.05)
    est_G = estimate_omega_G(G, [1.0, 0.0], params)
    est_f = estimate_omega(MapSystem(rot), (1.0, 0.0), 2001, 4000, 0.05, min_visits=3)
    assert len(est_G) == len(est_f) > 0
    for c in est_G.centers:
        assert est_f.near(c, 0.05)
