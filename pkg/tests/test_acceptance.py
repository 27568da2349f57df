"""Acceptance criteria, one test each. Every test records a PASS/FAIL line
that is printed in the terminal summary (and immediately, with ``-s``)."""

import filecmp
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from escapeset import suites
from escapeset.cli import main
from escapeset.corpus import duality_corpus, hyperspace_corpus, semigroup_corpus
from escapeset.escape_analysis import Outcome, Verdict, classify_escape, classify_escape_many, subsequence_certificate
from escapeset.flows import R3Saddle, Shift, Spiral, example_shift_points
from escapeset.phase_space import ball_exhaustion, constant_sequence, cylinder_exhaustion


def record(n: int, title: str, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_spiral_escaping_set():
    rng = np.random.default_rng(2024)
    r0 = 3.0 - rng.uniform(0.0, 3.0, 100)  # in (0, 3]
    r0 = r0[np.abs(r0 - 1.0) > 0.0]
    th = rng.uniform(0.0, 2 * math.pi, len(r0))
    t0 = time.perf_counter()
    verdicts = classify_escape_many(Spiral(), [Spiral.point(r, t) for r, t in zip(r0, th)],
                                    ball_exhaustion(2, 10), 50.0)
    elapsed = time.perf_counter() - t0
    wrong = sum((v.backward is Verdict.ESCAPING) != (r > 1.0) or v.backward is Verdict.INCONCLUSIVE
                for r, v in zip(r0, verdicts))
    record(1, "spiral Esc = {|x| > 1} (backward)", len(r0) == 100 and wrong == 0 and elapsed < 5.0,
           f"{len(r0)} points, {wrong} misclassified, {elapsed:.2f}s (limit 5s)")


def test_criterion_02_spiral_blowup_time():
    v = classify_escape(Spiral(), Spiral.point(2.0), ball_exhaustion(2), 50.0)
    got = v.backward_report.blowup_time
    want = 0.5 * math.log(3.0 / 4.0)
    err = abs(got - want) if got is not None else math.inf
    record(2, "spiral blowup time for r0=2", err <= 1e-6 and abs(want + 0.1438410) < 1e-7,
           f"reported {got!r}, closed form {want!r}, error {err:.2e} (tol 1e-6)")


def test_criterion_03_r3saddle_escaping_set():
    rng = np.random.default_rng(7)
    off = suites._r3saddle_offaxis(rng, 50)
    assert (off[:, 0] ** 2 + off[:, 1] ** 2 >= 0.01).all()
    axis = [(0.0, 0.0, z) for z in (-2.0, 0.0, 2.0)]
    t0 = time.perf_counter()
    vs = classify_escape_many(R3Saddle(), axis + [tuple(p) for p in off], ball_exhaustion(3, 10), 100.0)
    elapsed = time.perf_counter() - t0
    axis_ok = sum(v.forward is Verdict.ESCAPING for v in vs[:3])
    off_ok = sum(v.forward is Verdict.NON_ESCAPING for v in vs[3:])
    record(3, "r3saddle Esc = z-axis (forward)", axis_ok == 3 and off_ok == 50 and elapsed < 30.0,
           f"axis {axis_ok}/3 escaping, off-axis {off_ok}/50 non-escaping, {elapsed:.2f}s (limit 30s)")


def test_criterion_04_shift_examples():
    px, py = example_shift_points(2**20)
    lengths = subsequence_certificate(Shift(), px, [2**j for j in range(1, 17)], constant_sequence(1, 2**20))
    cert = all(L >= j for j, L in zip(range(1, 17), lengths))
    exh = cylinder_exhaustion()
    vx, vy = classify_escape(Shift(), px, exh).forward, classify_escape(Shift(), py, exh).forward
    record(4, "shift: x non-escaping by certificate, y escaping",
           cert and vx is Verdict.NON_ESCAPING and vy is Verdict.ESCAPING,
           f"agreement lengths {lengths[0]}..{lengths[-1]} for j=1..16, x {vx.value}, y {vy.value}")


def test_criterion_05_duality_suite():
    res = suites.duality()
    c = res.counts()
    systems = {case.system.name for case in duality_corpus()}
    ok = len(res.rows) >= 12 and c["fail"] == 0 and c["pass"] >= 9 and len(systems) == 4
    record(5, "omega/escape duality", ok,
           f"{len(res.rows)} pairs over {len(systems)} systems: {c['pass']} pass, {c['skip']} skip, {c['fail']} fail")


def test_criterion_06_hyperspace_equivalence():
    res = suites.hyperspace()
    cases = hyperspace_corpus()
    kinds = {"all": 0, "none": 0, "mixed": 0}
    for case in cases:
        key = "mixed" if "mixed" in case.label else ("all" if case.expected else "none")
        kinds[key] += 1
    mixed_ok = all(row["p1"] is False and row["p3"] is False and row["p4"] is False
                   for case, row in zip(cases, res.rows) if "mixed" in case.label)
    c = res.counts()
    ok = len(cases) >= 20 and all(kinds.values()) and c["fail"] == 0 and mixed_ok
    record(6, "hyperspace P1/P3/P4 equivalence", ok,
           f"{len(cases)} pairs ({kinds}), {c['pass']} agree, {c['skip']} unresolved, {c['fail']} disagree, "
           f"mixed all-false: {mixed_ok}")


def test_criterion_07_hausdorff_axioms():
    res = suites.hausdorff(seed=0, n_pairs=1000, max_size=8, bound=10.0)
    bad = {r["label"]: r["violations"] for r in res.rows}
    record(7, "Hausdorff metric axioms, exact", res.counts()["fail"] == 0, f"1000 pairs, violations {bad}")


def test_criterion_08_semigroup_invariance():
    res = suites.semigroup_invariance(seed=0)
    c = res.counts()
    labels = {case.label for case in semigroup_corpus()}
    rec = res.rows[-1]
    ok = c["fail"] == 0 and rec["outcome"] is Outcome.PASS and rec["applications"] <= 100_000
    record(8, "semigroup invariance of omega, Rec and Esc", ok,
           f"{len(labels)} semigroups, {c['pass']} pass, {c['skip']} skip, {c['fail']} fail; rotation recurrence "
           f"at eps=1e-3 after {rec['applications']} applications ({rec['visits']} returns)")


def test_criterion_09_conjugacy_transport():
    res = suites.conjugacy(seed=0)
    c = res.counts()
    named = {r["label"]: r for r in res.rows}
    cube = named["translation vs cube conjugate"]
    dbl = named["<2x> vs <2y-1> via x+1"]
    ok = c["fail"] == 0 and cube["outcome"] is Outcome.PASS and dbl["outcome"] is Outcome.PASS
    identities = [r for r in res.rows if r["label"].startswith("identity")]
    record(9, "conjugacy transport and identity self-test", ok,
           f"x^3 flow: verdicts {cube['verdict_mismatches']} mismatches, omega empty on both sides; "
           f"rotated spiral: {named['spiral vs rotated spiral']['clusters']} clusters transported; "
           f"x+1 doubling: {dbl['outcome'].value}; "
           f"{len(identities)} identity self-tests; {c['fail']} failures")


@pytest.mark.slow
def test_criterion_10_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    codes = [main(["--scenario", "paper_examples", "--out", str(d), "--seed", "0"]) for d in (a, b)]
    names = sorted(p.name for p in a.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    same = names == sorted(p.name for p in b.iterdir()) and not mismatch and not errors
    record(10, "paper_examples reproducible byte for byte", codes == [0, 0] and same,
           f"exit codes {codes}, {len(match)} identical files, {len(mismatch)} differing")
