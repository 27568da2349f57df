import math

import numpy as np
import pytest

from escapeset.corpus import GOLDEN_ANGLE, rotation_map, semigroup_corpus
from escapeset.errors import DomainError, NotAConjugacy, OrbitNotBounded
from escapeset.escape_analysis import Outcome, Verdict
from escapeset.expressions import CustomMap, identity_map
from escapeset.phase_space import Ball, ball_exhaustion
from escapeset.semigroup import (
    GeneratorSet,
    SemigroupParams,
    SemigroupWord,
    UnboundedSequenceSpec,
    apply_word,
    check_closedness,
    check_minimality,
    check_omega_invariance,
    check_precompact_nonempty,
    check_recurrence,
    check_recurrence_invariance,
    check_semigroup_conjugacy,
    classify_escape_G,
    estimate_omega_G,
    is_invariant,
    recurrence_evidence,
    run_sequence,
    sample_orbit,
)

gen = GeneratorSet.from_expressions
FAST = SemigroupParams(budget=20_000, eps=1e-2)
ROT = GeneratorSet((rotation_map(GOLDEN_ANGLE),), ("rot",), abelian=True)


def test_word_application_right_to_left():
    assert apply_word(gen({"g": "x+1"}), (0, 0, 0), [0.0]).tolist() == [3.0]
    G = gen({"double": "2*x", "succ": "x+1"})
    assert apply_word(G, (0, 1, 0), [1.0]).tolist() == [6.0]
    assert apply_word(G, (1, 0), [1.0]).tolist() == [3.0]


def test_empty_word_is_rejected():
    with pytest.raises(ValueError):
        SemigroupWord(())
    with pytest.raises(ValueError):
        apply_word(gen({"g": "x+1"}), (), [0.0])


def test_word_domain_error_reports_position():
    G = gen({"root": "sqrt(x)", "neg": "x-5"})
    with pytest.raises(DomainError) as info:
        apply_word(G, (0, 1), [1.0])
    assert info.value.position == 0


def test_sample_orbit_enumerates_short_words():
    s = sample_orbit(gen({"g": "x+1"}), [0.0], 3)
    assert sorted(v[0] for v in s.values) == [1.0, 2.0, 3.0]
    assert not s.sampled
    s = sample_orbit(gen({"succ": "x+1", "double": "2*x"}), [1.0], 2)
    assert len(s.words) == 6
    assert set(s.values[:, 0].tolist()) == {2.0, 3.0, 4.0}
    for w, v in zip(s.words, s.values):
        assert apply_word(gen({"succ": "x+1", "double": "2*x"}), w, [1.0])[0] == v[0]


def test_sample_orbit_budget_flag():
    s = sample_orbit(gen({"a": "x+1", "b": "2*x"}), [1.0], 12, seed=3, budget=50)
    assert s.sampled and len(s.words) == 50


def test_schedule_validation():
    assert UnboundedSequenceSpec(0, "2^k").n(5) == 32
    with pytest.raises(ValueError):
        UnboundedSequenceSpec(0, (1, 1, 3))
    with pytest.raises(ValueError):
        UnboundedSequenceSpec(0, (1, 2, 2))
    with pytest.raises(ValueError):
        UnboundedSequenceSpec(0, (2, 3, 3))
    with pytest.raises(ValueError):
        UnboundedSequenceSpec(0, "k^2")


def test_fillers_avoid_designated_generator():
    G = gen({"a": "x+1", "b": "2*x", "c": "x/3"})
    spec = UnboundedSequenceSpec(1, "k", 3, seed=5)
    stream = spec.filler_stream(G)
    for _ in range(200):
        assert 1 not in next(stream)
    with pytest.raises(ValueError):
        next(UnboundedSequenceSpec(1, "k", fillers=((1,),)).filler_stream(G))


def test_family_size_and_budget_split():
    p = SemigroupParams()
    assert len(p.family(gen({"g": "x/2"}))) == 3
    assert len(p.family(gen({"a": "x/2", "b": "x/3"}))) == 2 * 3 * (1 + 8)
    assert p.budget_per_spec(gen({"g": "x/2"})) == 100_000 // 3


def test_omega_examples():
    assert estimate_omega_G(gen({"g": "x/2"}), [1.0], FAST).array.tolist() == [[0.0]]
    assert estimate_omega_G(gen({"g": "x+1"}), [0.0], FAST).empty
    est = estimate_omega_G(ROT, [1.0, 0.0], SemigroupParams(eps=1e-2))
    assert est.near([1.0, 0.0], 1e-2)


def test_omega_invariance_examples():
    assert check_omega_invariance(gen({"g": "x/2"}), [1.0], FAST)
    assert check_omega_invariance(gen({"g": "x+1"}), [0.0], FAST)
    assert check_omega_invariance(ROT, [1.0, 0.0], FAST)


def test_precompact():
    assert check_precompact_nonempty(gen({"g": "x/2"}), [1.0], Ball((0.0,), 1.0), FAST)
    assert check_precompact_nonempty(ROT, [1.0, 0.0], Ball((0.0, 0.0), 1.0 + 1e-9), FAST)
    with pytest.raises(OrbitNotBounded):
        check_precompact_nonempty(gen({"g": "x+1"}), [0.0], Ball((0.0,), 10.0), FAST)


def test_closedness():
    assert check_closedness(gen({"g": "x/2"}), [1.0], FAST)
    assert check_closedness(ROT, [1.0, 0.0], FAST)
    assert check_closedness(gen({"g": "x+1"}), [0.0], FAST)


def test_minimality_examples():
    half = gen({"g": "x/2"})
    assert check_minimality(half, [[0.0]], FAST) is True
    assert check_minimality(half, [[0.0], [1.0]], FAST) is False
    net = [[math.cos(a), math.sin(a)] for a in np.linspace(0, 2 * math.pi, 12, endpoint=False)]
    assert check_minimality(ROT, net, SemigroupParams(eps=0.05, budget=50_000)) is True


def test_invariance_test_for_sets():
    assert is_invariant(gen({"g": "x/2"}), np.array([[0.0]]), 1e-9)
    assert not is_invariant(gen({"g": "x+1"}), np.array([[0.0]]), 1e-3)
    assert not is_invariant(gen({"g": "x/2"}), np.array([[0.0], [1.0]]), 1e-3)


def test_recurrence_examples():
    ev = recurrence_evidence(ROT, [1.0, 0.0], SemigroupParams(eps=1e-3, budget=100_000))
    assert ev.recurrent and ev.applications <= 100_000
    assert check_recurrence(ROT, ROT.maps[0]([1.0, 0.0]), SemigroupParams(eps=1e-3))
    assert not check_recurrence(gen({"g": "x+1"}), [0.0], FAST)
    assert check_recurrence(gen({"g": "x/2"}), [0.0], FAST)
    assert check_recurrence_invariance(ROT, [1.0, 0.0], SemigroupParams(eps=1e-3)) is Outcome.PASS
    assert check_recurrence_invariance(gen({"g": "x+1"}), [0.0], FAST) is Outcome.SKIP


def test_escape_examples():
    exh = ball_exhaustion(1)
    v = classify_escape_G(gen({"a": "x+1", "b": "x+2"}, abelian=True), [0.0], exh, FAST)
    assert v.verdict is Verdict.ESCAPING and v.invariance_ok
    assert all(c is Verdict.ESCAPING for c in v.companions.values())
    assert classify_escape_G(gen({"a": "x/2", "b": "x/3"}), [1.0], exh, FAST).verdict is Verdict.NON_ESCAPING
    v = classify_escape_G(gen({"double": "2*x", "succ": "x+1"}), [1.0], exh, FAST)
    assert v.verdict is Verdict.ESCAPING and v.invariance_ok


def test_escape_on_small_words_by_enumeration():
    # every word of length 20 over {2x, x+1} sends 1 to at least 21
    G = gen({"double": "2*x", "succ": "x+1"})
    s = sample_orbit(G, [1.0], 20, seed=0, budget=5_000)
    long = np.array([len(w) for w in s.words]) == 20
    assert (s.values[long, 0] >= 21).all()


def test_conjugacy_examples():
    exh = ball_exhaustion(1)
    r = check_semigroup_conjugacy(gen({"d": "2*x"}), gen({"d": "2*x - 1"}),
                                  CustomMap(["x+1"], ["x"], inverse=["x-1"]), [[0.0], [0.5]], exh, FAST)
    assert r.outcome is Outcome.PASS
    r = check_semigroup_conjugacy(gen({"h": "x/2"}), gen({"h": "(cbrt(x)/2)**3"}),
                                  CustomMap(["x**3"], ["x"], inverse=["cbrt(x)"]), [[1.0], [-2.0]], exh, FAST)
    assert r.outcome is Outcome.PASS
    with pytest.raises(NotAConjugacy):
        check_semigroup_conjugacy(gen({"d": "2*x"}), gen({"d": "3*x"}),
                                  CustomMap(["x+1"], ["x"], inverse=["x-1"]), [[0.5]], exh, FAST)


@pytest.mark.parametrize("case", semigroup_corpus(), ids=lambda c: c.label)
def test_identity_conjugacy_self_test(case):
    G = case.generators
    r = check_semigroup_conjugacy(G, G, identity_map(G.dim), case.points, ball_exhaustion(G.dim), FAST)
    assert r.outcome is Outcome.PASS


def test_abelian_flag_is_verified():
    with pytest.raises(ValueError):
        gen({"a": "2*x", "b": "x+1"}, abelian=True)
    assert gen({"a": "x/2", "b": "x/3"}, abelian=True).commutator_residual(np.array([[1.0], [3.0]])) == 0.0


def test_run_sequence_counts_match_schedule():
    G = gen({"a": "x/2", "b": "x/3"})
    spec = UnboundedSequenceSpec(0, "2k", 3, seed=1)
    run = run_sequence(G, [1.0], spec, 50, 10_000)
    assert [c[0] for c in run.counts] == [spec.n(k) for k in range(1, run.n_terms + 1)]
