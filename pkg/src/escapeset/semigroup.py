"""Finitely generated semigroups of continuous self-maps of R^n.

Words are tuples of generator indices composed right to left: ``(0, 1)``
means ``g_0 ∘ g_1``. An unbounded sequence is produced by an
:class:`UnboundedSequenceSpec`: its k-th term contains exactly ``n_k``
occurrences of the designated generator ``g_a``, separated by filler words
that never use ``g_a``. Terms are built incrementally, so the whole
sequence costs as many map applications as its last term.

Statements quantifying over *all* unbounded sequences are approximated by
a finite family of specs (schedules × filler lengths × seeds, for every
choice of designated generator).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, NotAConjugacy, NotInvariant, OrbitNotBounded
from .escape_analysis import (
    DirectionReport,
    LevelWitness,
    LimitSetEstimate,
    Outcome,
    Verdict,
    greedy_clusters,
    local_lipschitz,
)
from .expressions import CustomMap
from .phase_space import CompactExhaustion, CompactRegion, image_exhaustion

Word = tuple[int, ...]


@dataclass(frozen=True)
class GeneratorSet:
    maps: tuple[CustomMap, ...]
    names: tuple[str, ...] = ()
    abelian: bool = False
    abelian_tol: float = 1e-9

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise ValueError("a semigroup needs at least one generator")
        if len({g.dim for g in maps}) != 1:
            raise ValueError("generators must act on a common space")
        names = tuple(self.names) or tuple(f"g{i}" for i in range(len(maps)))
        if len(names) != len(maps):
            raise ValueError("one name per generator")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "names", names)
        if self.abelian:
            res = self.commutator_residual(_probe_points(self.dim))
            if res > self.abelian_tol:
                raise ValueError(f"generators flagged abelian but commutator residual is {res:.3g}")

    @classmethod
    def from_expressions(cls, generators: Mapping[str, Sequence[str] | str], variables: Sequence[str] | None = None,
                         abelian: bool = False) -> "GeneratorSet":
        maps = tuple(CustomMap(comp, variables, name=name) for name, comp in generators.items())
        return cls(maps, tuple(generators), abelian)

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    @property
    def m(self) -> int:
        return len(self.maps)

    def commutator_residual(self, samples: np.ndarray) -> float:
        worst = 0.0
        for i in range(self.m):
            for j in range(i + 1, self.m):
                a = self.maps[i](self.maps[j](samples))
                b = self.maps[j](self.maps[i](samples))
                scale = np.maximum(1.0, np.abs(a).max(axis=1))
                worst = max(worst, float((np.abs(a - b).max(axis=1) / scale).max()))
        return worst

    def describe(self) -> dict:
        return {"generators": {n: [e.source for e in g.components] for n, g in zip(self.names, self.maps)},
                "variables": list(self.maps[0].variables), "abelian": self.abelian}


def _probe_points(dim: int, n: int = 16) -> np.ndarray:
    return np.random.default_rng(0).uniform(-2.0, 2.0, size=(n, dim))


@dataclass(frozen=True)
class SemigroupWord:
    letters: Word

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(i) for i in self.letters))
        if not self.letters:
            raise ValueError("the empty word is the identity, which is not in the semigroup")

    def counts(self, m: int) -> tuple[int, ...]:
        c = [0] * m
        for i in self.letters:
            c[i] += 1
        return tuple(c)

    def __len__(self):
        return len(self.letters)

    def label(self, G: GeneratorSet) -> str:
        return "∘".join(G.names[i] for i in self.letters)


def apply_word(G: GeneratorSet, w: SemigroupWord | Word, x) -> np.ndarray:
    """Apply ``w`` to ``x`` right to left."""
    if not isinstance(w, SemigroupWord):
        w = SemigroupWord(tuple(w))
    if any(not 0 <= i < G.m for i in w.letters):
        raise ValueError(f"word uses unknown generator index: {w.letters}")
    val = np.asarray(x, dtype=float).copy()
    applied = [0] * G.m
    for pos in range(len(w.letters) - 1, -1, -1):
        i = w.letters[pos]
        try:
            val = G.maps[i](val)
        except DomainError as exc:
            raise DomainError(f"{G.names[i]} failed at word position {pos}: {exc}", position=pos) from None
        applied[i] += 1
    assert tuple(applied) == w.counts(G.m)
    return val


@dataclass
class OrbitSample:
    words: list[Word]
    values: np.ndarray
    sampled: bool  # True when the budget forced random sampling

    def __iter__(self):
        return iter(zip(self.words, self.values))

    def __len__(self):
        return len(self.words)


def sample_orbit(G: GeneratorSet, x, max_len: int, seed: int = 0, budget: int = 100_000) -> OrbitSample:
    """All words up to ``max_len`` (shortest first) when there are at most
    ``budget`` of them, else ``budget`` seeded random words."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    x = np.asarray(x, dtype=float)
    total = sum(G.m**L for L in range(1, max_len + 1))
    if total <= budget:
        words: list[Word] = []
        values = []
        level_words: list[Word] = [()]
        level_vals = x[None, :]
        for _ in range(max_len):
            new_words, new_vals = [], []
            for i, g in enumerate(G.maps):
                new_words.extend((i, *w) for w in level_words)
                new_vals.append(g(level_vals))
            level_words = new_words
            level_vals = np.concatenate(new_vals)
            words.extend(level_words)
            values.append(level_vals)
        return OrbitSample(words, np.concatenate(values), False)
    rng = np.random.default_rng(seed)
    words = []
    vals = np.empty((budget, G.dim))
    for k in range(budget):
        L = int(rng.integers(1, max_len + 1))
        w = tuple(int(i) for i in rng.integers(0, G.m, size=L))
        words.append(w)
        vals[k] = apply_word(G, w, x)
    return OrbitSample(words, vals, True)


# ---------------------------------------------------------------- sequences


SCHEDULES = ("k", "2k", "2^k")


@dataclass(frozen=True)
class UnboundedSequenceSpec:
    alpha0: int
    schedule: str | tuple[int, ...] = "k"
    filler_length: int = 0  # fillers drawn with length uniform in 0..L
    seed: int = 0
    fillers: tuple[Word, ...] | None = None  # fixed filler list, cycled

    def __post_init__(self):
        if isinstance(self.schedule, str):
            if self.schedule not in SCHEDULES:
                raise ValueError(f"unknown schedule {self.schedule!r}")
        else:
            sched = tuple(int(n) for n in self.schedule)
            if any(b <= a for a, b in zip(sched, sched[1:])):
                raise ValueError("schedule must be strictly increasing")
            if any(n < k for k, n in enumerate(sched, start=1)):
                raise ValueError("schedule must satisfy n_k >= k")
            object.__setattr__(self, "schedule", sched)
        if self.filler_length < 0:
            raise ValueError("filler length must be nonnegative")

    def n(self, k: int) -> int:
        """Occurrences of the designated generator in term ``k`` (1-based)."""
        if self.schedule == "k":
            return k
        if self.schedule == "2k":
            return 2 * k
        if self.schedule == "2^k":
            return 2**k
        return self.schedule[k - 1]

    def max_terms(self) -> int | None:
        return None if isinstance(self.schedule, str) else len(self.schedule)

    def filler_stream(self, G: GeneratorSet):
        """Infinite iterator of filler words ``h_0, h_1, ...`` avoiding ``alpha0``."""
        others = [i for i in range(G.m) if i != self.alpha0]
        if self.fillers is not None:
            for w in self.fillers:
                if self.alpha0 in w:
                    raise ValueError("filler words must not use the designated generator")
            j = 0
            while True:
                yield tuple(self.fillers[j % len(self.fillers)]) if self.fillers else ()
                j += 1
        rng = np.random.default_rng(self.seed)
        while True:
            if not others or self.filler_length == 0:
                yield ()
            else:
                L = int(rng.integers(0, self.filler_length + 1))
                yield tuple(int(others[i]) for i in rng.integers(0, len(others), size=L))

    def term_word(self, G: GeneratorSet, k: int) -> SemigroupWord:
        """Explicit word of term ``k`` (for small k; the evaluator never builds it)."""
        stream = self.filler_stream(G)
        letters = list(reversed(next(stream)))  # innermost filler h_0, in application order
        for _ in range(self.n(k)):
            letters.append(self.alpha0)
            letters.extend(reversed(next(stream)))
        return SemigroupWord(tuple(reversed(letters)))

    def to_dict(self) -> dict:
        return {"alpha0": self.alpha0, "schedule": self.schedule if isinstance(self.schedule, str)
                else list(self.schedule), "filler_length": self.filler_length, "seed": self.seed}


@dataclass
class SequenceRun:
    spec: UnboundedSequenceSpec
    values: np.ndarray  # (K, d): f_{n_k}(x) for k = 1..K
    counts: np.ndarray  # (K, m): generator occurrences in term k
    applications: int
    diverged_at: int | None = None  # first k whose value is non-finite

    @property
    def n_terms(self) -> int:
        return len(self.values)

    def tail(self, fraction: float) -> np.ndarray:
        start = int(math.floor(self.n_terms * fraction))
        return self.values[start:]


def run_sequence(G: GeneratorSet, x, spec: UnboundedSequenceSpec, k_terms: int, budget: int,
                 r_div: float = 1e300) -> SequenceRun:
    """Evaluate ``f_{n_k}(x)`` for ``k = 1..k_terms`` within ``budget`` applications."""
    if k_terms < 2:
        raise ValueError("need at least two terms")
    if not 0 <= spec.alpha0 < G.m:
        raise ValueError("designated generator out of range")
    cap = spec.max_terms()
    if cap is not None:
        k_terms = min(k_terms, cap)
    g = G.maps[spec.alpha0].step
    steps = [h.step for h in G.maps]
    stream = spec.filler_stream(G)
    state = tuple(float(v) for v in np.asarray(x, dtype=float))
    counts = [0] * G.m
    apps = 0
    values, term_counts = [], []
    diverged = None

    def apply_filler(st):
        nonlocal apps
        for i in reversed(next(stream)):
            st = steps[i](st)
            counts[i] += 1
            apps += 1
        return st

    def blown(st):
        return any(not (abs(v) <= r_div) for v in st)

    try:
        state = apply_filler(state)
        done = 0
        for k in range(1, k_terms + 1):
            target = spec.n(k)
            if apps + (target - done) > budget and k > 1:
                break
            while done < target:
                state = apply_filler(g(state))
                counts[spec.alpha0] += 1
                apps += 1
                done += 1
                if blown(state):
                    diverged = k
                    break
            if diverged is not None:
                break
            values.append(state)
            term_counts.append(tuple(counts))
    except DomainError:
        if not blown(state):
            raise
        diverged = len(values) + 1
    vals = np.array(values).reshape(-1, G.dim)
    cnts = np.array(term_counts, dtype=np.int64).reshape(-1, G.m)
    return SequenceRun(spec, vals, cnts, apps, diverged)


@dataclass(frozen=True)
class SemigroupParams:
    k_terms: int = 100_000
    eps: float = 1e-3
    m_min: int = 3
    budget: int = 100_000
    schedules: tuple = SCHEDULES
    filler_lengths: tuple = (0, 3)
    seeds: tuple = tuple(range(8))
    tail_fraction: float = 0.5
    max_checked: int = 256  # clusters examined per invariance/closedness check

    def family(self, G: GeneratorSet) -> list[UnboundedSequenceSpec]:
        specs = []
        for a in range(G.m):
            for sched in self.schedules:
                for L in self.filler_lengths:
                    if L == 0 or G.m == 1:
                        spec = UnboundedSequenceSpec(a, sched, 0, 0)
                        if spec not in specs:
                            specs.append(spec)
                    else:
                        specs.extend(UnboundedSequenceSpec(a, sched, L, s) for s in self.seeds)
        return specs

    def budget_per_spec(self, G: GeneratorSet) -> int:
        return max(2, self.budget // len(self.family(G)))

    def to_dict(self, G: GeneratorSet | None = None) -> dict:
        out = {"k_terms": self.k_terms, "eps": self.eps, "m_min": self.m_min, "budget": self.budget,
               "schedules": list(self.schedules), "filler_lengths": list(self.filler_lengths),
               "seeds": list(self.seeds), "tail_fraction": self.tail_fraction}
        if G is not None:
            out["family_size"] = len(self.family(G))
            out["budget_per_spec"] = self.budget_per_spec(G)
        return out


def run_family(G: GeneratorSet, x, params: SemigroupParams) -> list[SequenceRun]:
    per = params.budget_per_spec(G)
    return [run_sequence(G, x, spec, params.k_terms, per) for spec in params.family(G)]


def tail_visits(run: SequenceRun, z, tol: float, fraction: float) -> int:
    tail = run.tail(fraction)
    tail = tail[resolvable(tail, tol)]
    if len(tail) == 0:
        return 0
    with np.errstate(over="ignore"):
        return int((np.sqrt(((tail - np.asarray(z, dtype=float)) ** 2).sum(axis=1)) <= tol).sum())


def supported(runs: Sequence[SequenceRun], z, tol: float, m_min: int, fraction: float) -> bool:
    """Some single run returns to the ``tol``-ball at ``z`` at least ``m_min`` times in its tail."""
    return any(tail_visits(r, z, tol, fraction) >= m_min for r in runs)


def resolvable(values: np.ndarray, eps: float) -> np.ndarray:
    """Rows whose coordinates are represented more finely than ``eps``.

    Beyond that magnitude floats are spaced wider than the cluster radius
    (``x + 1 == x`` once ``|x| >= 2**53``), so a run can look stationary
    while the exact orbit moves; such values are never clustered.
    """
    with np.errstate(invalid="ignore"):
        return (np.isfinite(values) & (np.spacing(np.abs(values)) <= eps / 4)).all(axis=1)


def estimate_from_runs(runs: Sequence[SequenceRun], eps: float, m_min: int, fraction: float) -> LimitSetEstimate:
    """Per run: ε-cluster the resolvable tail values, keep clusters with >= ``m_min``
    visits; then merge across runs."""
    centers, counts = [], []
    unclustered = 0
    for run in runs:
        tail = run.tail(fraction)
        ok = resolvable(tail, eps)
        unclustered += int((~ok).sum())
        tail = tail[ok]
        if len(tail) < m_min:
            continue
        idx, labels = greedy_clusters(tail, eps)
        visits = np.bincount(labels, minlength=len(idx))
        for c in np.flatnonzero(visits >= m_min):
            centers.append(tail[idx[c]])
            counts.append(int(visits[c]))
    if not centers:
        return LimitSetEstimate([], eps, (fraction, 1.0), unclustered=unclustered)
    arr = np.array(centers)
    idx, labels = greedy_clusters(arr, eps)
    merged = np.bincount(labels, weights=counts, minlength=len(idx)).astype(int)
    return LimitSetEstimate([arr[i] for i in idx], eps, (fraction, 1.0), tuple(int(v) for v in merged), unclustered)


def estimate_omega_G(G: GeneratorSet, x, params: SemigroupParams = SemigroupParams()) -> LimitSetEstimate:
    """ε-clusters that some single unbounded sequence of the family keeps returning to in its tail."""
    return estimate_from_runs(run_family(G, x, params), params.eps, params.m_min, params.tail_fraction)


def post_composed(G: GeneratorSet, run: SequenceRun, i: int) -> SequenceRun:
    """The sequence ``g_i ∘ f_{n_k}``: again unbounded in the same designated
    generator (``g_i`` joins the last filler, or adds one occurrence when it
    is the designated generator itself)."""
    with np.errstate(all="ignore"):
        vals = G.maps[i](run.values) if run.n_terms else run.values
    counts = run.counts.copy()
    if len(counts):
        counts[:, i] += 1
    return SequenceRun(run.spec, vals, counts, run.applications + run.n_terms, run.diverged_at)


def _checked(est: LimitSetEstimate, limit: int) -> list:
    if len(est.centers) <= limit:
        return list(est.centers)
    step = len(est.centers) / limit
    return [est.centers[int(i * step)] for i in range(limit)]


def check_omega_invariance(G: GeneratorSet, x, params: SemigroupParams = SemigroupParams()) -> bool:
    """``g(ω(x)) ⊆ ω(x)``: each image of a cluster must be matched (within 2ε)
    by a re-run with doubled budget whose family is closed under
    post-composition with the generators. False only on a confirmed miss."""
    est = estimate_omega_G(G, x, params)
    if est.empty:
        return True
    # doubled budget; the tail window starts where the original one did, so it contains it
    bigger = replace(params, budget=2 * params.budget, tail_fraction=params.tail_fraction / 2)
    base = run_family(G, x, bigger)
    runs2 = base + [post_composed(G, r, i) for r in base for i in range(G.m)]
    est2 = estimate_from_runs(runs2, params.eps, params.m_min, bigger.tail_fraction)
    tol = 2 * params.eps
    for z in _checked(est, params.max_checked):
        for g in G.maps:
            gz = g(z)
            if not (est2.near(gz, tol) or supported(runs2, gz, tol, params.m_min, bigger.tail_fraction)):
                return False
    return True


def check_precompact_nonempty(G: GeneratorSet, x, bound: CompactRegion, params: SemigroupParams = SemigroupParams(),
                              orbit_len: int = 8) -> bool:
    """Orbit inside a compact set ⇒ ω(x) nonempty. Raises :class:`OrbitNotBounded`
    if the sampled orbit (words up to ``orbit_len`` plus every sequence term) leaves ``bound``."""
    orbit = sample_orbit(G, x, orbit_len, budget=params.budget)
    if not bound.contains_many(orbit.values).all():
        raise OrbitNotBounded("sampled orbit leaves the bounding region")
    runs = run_family(G, x, params)
    for r in runs:
        if r.diverged_at is not None or (len(r.values) and not bound.contains_many(r.values).all()):
            raise OrbitNotBounded(f"sequence {r.spec.to_dict()} leaves the bounding region")
    return not estimate_from_runs(runs, params.eps, params.m_min, params.tail_fraction).empty


def check_closedness(G: GeneratorSet, x, params: SemigroupParams = SemigroupParams()) -> bool:
    """Clusters at resolution ε must persist (within 2ε) at ε/2 with doubled budget."""
    est = estimate_omega_G(G, x, params)
    if est.empty:
        return True
    finer = replace(params, eps=params.eps / 2, budget=2 * params.budget)
    runs2 = run_family(G, x, finer)
    est2 = estimate_from_runs(runs2, finer.eps, finer.m_min, finer.tail_fraction)
    tol = 2 * params.eps
    return all(est2.near(z, tol) or supported(runs2, z, tol, params.m_min, params.tail_fraction)
               for z in _checked(est, params.max_checked))


def is_invariant(G: GeneratorSet, M: np.ndarray, tol: float) -> bool:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    for g in G.maps:
        img = g(M)
        d = np.sqrt(((img[:, None, :] - M[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
        if (d > tol).any():
            return False
    return True


def check_minimality(G: GeneratorSet, M, params: SemigroupParams = SemigroupParams(), n_samples: int = 4) -> bool:
    """M is minimal iff ``M = ω(x)`` for every ``x ∈ M``.

    Checked on ``n_samples`` evenly spaced members: the ω-estimate must cover
    M to within 2ε and stay within 2ε plus half of M's largest nearest-neighbour
    gap of it. A set failing that is reported not minimal;
    a set passing it that is nonetheless not ε-invariant raises
    :class:`NotInvariant`, since ω-limit sets are always invariant.
    """
    pts = np.atleast_2d(np.asarray(getattr(M, "points", M), dtype=float))
    tol = 2 * params.eps
    # a finite M stands for a set sampled at its own spacing; ω may fall between samples
    if len(pts) > 1:
        gaps = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
        np.fill_diagonal(gaps, np.inf)
        spread = tol + 0.5 * gaps.min(axis=1).max()
    else:
        spread = tol
    picks = pts[np.unique(np.linspace(0, len(pts) - 1, min(n_samples, len(pts))).astype(int))]
    for x in picks:
        runs = run_family(G, x, params)
        est = estimate_from_runs(runs, params.eps, params.m_min, params.tail_fraction)
        if est.empty:
            return False
        for m in pts:
            if not (est.near(m, tol) or supported(runs, m, tol, params.m_min, params.tail_fraction)):
                return False
        centers = est.array
        d = np.sqrt(((centers[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
        if (d > spread).any():
            return False
    if not is_invariant(G, pts, spread):
        raise NotInvariant("generators do not map M into itself")
    return True


@dataclass
class RecurrenceEvidence:
    recurrent: bool
    visits: int
    min_distance: float
    applications: int


def recurrence_evidence(G: GeneratorSet, x, params: SemigroupParams = SemigroupParams()) -> RecurrenceEvidence:
    """Runs the family in order and stops at the first sequence whose tail
    returns to the ε-ball at ``x`` at least ``m_min`` times."""
    x = np.asarray(x, dtype=float)
    per = params.budget_per_spec(G)
    apps, best, dmin = 0, 0, math.inf
    for spec in params.family(G):
        run = run_sequence(G, x, spec, params.k_terms, per)
        apps += run.applications
        tail = run.tail(params.tail_fraction)
        if len(tail):
            with np.errstate(over="ignore"):
                d = np.sqrt(((tail - x) ** 2).sum(axis=1))
            dmin = min(dmin, float(d.min()))
            visits = int((d <= params.eps).sum())
            best = max(best, visits)
            if visits >= params.m_min:
                return RecurrenceEvidence(True, visits, dmin, apps)
        est = estimate_from_runs([run], params.eps, params.m_min, params.tail_fraction)
        if est.near(x, params.eps):
            return RecurrenceEvidence(True, best, dmin, apps)
    return RecurrenceEvidence(False, best, dmin, apps)


def check_recurrence(G: GeneratorSet, x, params: SemigroupParams = SemigroupParams()) -> bool:
    """``x ∈ ω(x)`` to resolution ε."""
    return recurrence_evidence(G, x, params).recurrent


def check_recurrence_invariance(G: GeneratorSet, x, params: SemigroupParams = SemigroupParams()) -> Outcome:
    """For abelian G, a recurrent x must have every ``g(x)`` recurrent too."""
    if not G.abelian or not check_recurrence(G, x, params):
        return Outcome.SKIP
    for g in G.maps:
        if not check_recurrence(G, g(np.asarray(x, dtype=float)), params):
            return Outcome.FAIL
    return Outcome.PASS


# ------------------------------------------------------------------ escape


@dataclass
class SemigroupEscapeVerdict:
    verdict: Verdict
    per_spec: list = field(default_factory=list)  # (spec dict, DirectionReport)
    companions: dict = field(default_factory=dict)  # generator name -> Verdict at g(x)

    @property
    def invariance_ok(self) -> bool:
        """x escaping ⇒ every g(x) escaping."""
        if self.verdict is not Verdict.ESCAPING or not self.companions:
            return True
        return all(v is Verdict.ESCAPING for v in self.companions.values())


def _classify_run(run: SequenceRun, x, exh: CompactExhaustion, fraction: float) -> DirectionReport:
    n = run.n_terms
    start = int(math.floor(n * fraction))
    vals = run.values
    mem = exh.membership(vals) if n else np.zeros((exh.max_level, 0), dtype=bool)
    witnesses, reentered = [], False
    for m in range(exh.max_level):
        inside = np.flatnonzero(mem[m])
        if inside.size and inside[-1] >= start and run.diverged_at is None:
            witnesses.append(LevelWitness(m + 1, None, float(inside[inside >= start][0] + 1)))
            reentered = True
        else:
            witnesses.append(LevelWitness(m + 1, float(inside[-1] + 2) if inside.size else 0.0, None))
    if reentered:
        return DirectionReport(Verdict.NON_ESCAPING, tuple(witnesses))
    if run.diverged_at is None and n < 2:
        return DirectionReport(Verdict.INCONCLUSIVE, tuple(witnesses), note="too few terms")
    ever = mem[-1].any() or exh.top.contains_many(np.asarray(x, dtype=float)[None, :])[0]
    if not ever and run.diverged_at is None:
        return DirectionReport(Verdict.INCONCLUSIVE, tuple(witnesses), note="never inside the largest level")
    blow = float(run.diverged_at) if run.diverged_at is not None else None
    return DirectionReport(Verdict.ESCAPING, tuple(witnesses), blow)


def _escape_once(G, x, exh, params) -> tuple[Verdict, list]:
    per_spec = []
    for run in run_family(G, x, params):
        per_spec.append((run.spec.to_dict(), _classify_run(run, x, exh, params.tail_fraction)))
    verdicts = [rep.verdict for _, rep in per_spec]
    if Verdict.NON_ESCAPING in verdicts:
        return Verdict.NON_ESCAPING, per_spec
    if Verdict.INCONCLUSIVE in verdicts:
        return Verdict.INCONCLUSIVE, per_spec
    return Verdict.ESCAPING, per_spec


def classify_escape_G(G: GeneratorSet, x, exh: CompactExhaustion, params: SemigroupParams = SemigroupParams(),
                      companions: bool = True) -> SemigroupEscapeVerdict:
    """Escaping iff every sequence of the family leaves every level ``K_m``
    before its tail and never comes back within budget."""
    x = np.asarray(x, dtype=float)
    verdict, per_spec = _escape_once(G, x, exh, params)
    comp = {}
    if companions:
        for name, g in zip(G.names, G.maps):
            comp[name] = _escape_once(G, g(x), exh, params)[0]
    return SemigroupEscapeVerdict(verdict, per_spec, comp)


# --------------------------------------------------------------- conjugacy


@dataclass
class SemigroupConjugacyReport:
    outcome: Outcome
    max_residual: float
    rows: list = field(default_factory=list)  # per sample dict
    failures: list = field(default_factory=list)


def check_semigroup_conjugacy(G: GeneratorSet, Gt: GeneratorSet, rho: CustomMap, samples: Sequence,
                              exh: CompactExhaustion, params: SemigroupParams = SemigroupParams(),
                              tol: float = 1e-9) -> SemigroupConjugacyReport:
    """Transport of ω-clusters, recurrence and escape verdicts along ``rho``.

    Requires ``rho ∘ g_i = g̃_i ∘ rho`` on the samples (relative residual <=
    ``tol``) and an explicit inverse of ``rho`` for the image exhaustion.
    """
    if G.m != Gt.m:
        raise NotAConjugacy("generator sets have different sizes")
    if not rho.has_inverse:
        raise NotAConjugacy("conjugacy map needs an explicit inverse")
    xs = np.atleast_2d(np.asarray(samples, dtype=float))
    probe = np.concatenate([xs, _probe_points(G.dim)])
    worst = 0.0
    for g, gt in zip(G.maps, Gt.maps):
        a = rho(g(probe))
        b = gt(rho(probe))
        scale = np.maximum(1.0, np.abs(a).max(axis=1))
        worst = max(worst, float((np.abs(a - b).max(axis=1) / scale).max()))
    if worst > tol:
        raise NotAConjugacy(f"rho∘g differs from g̃∘rho by {worst:.3g}")
    image = image_exhaustion(exh, rho.inverse, rho.name)
    rows, failures = [], []
    for x in xs:
        y = rho(x)
        runs_x = run_family(G, x, params)
        runs_y = run_family(Gt, y, params)
        est_x = estimate_from_runs(runs_x, params.eps, params.m_min, params.tail_fraction)
        est_y = estimate_from_runs(runs_y, params.eps, params.m_min, params.tail_fraction)
        missed = 0
        for z in _checked(est_x, params.max_checked):
            delta = 2 * params.eps * max(1.0, local_lipschitz(rho, z, params.eps))
            rz = rho(z)
            if not (est_y.near(rz, delta) or supported(runs_y, rz, delta, params.m_min, params.tail_fraction)):
                missed += 1
        rec_x = check_recurrence(G, x, params)
        rec_y = check_recurrence(Gt, y, params)
        esc_x = classify_escape_G(G, x, exh, params, companions=False).verdict
        esc_y = classify_escape_G(Gt, y, image, params, companions=False).verdict
        row = {"x": x.tolist(), "rho_x": y.tolist(), "clusters": len(est_x), "clusters_image": len(est_y),
               "missed_clusters": missed, "recurrent": [rec_x, rec_y], "escape": [esc_x.value, esc_y.value]}
        rows.append(row)
        if missed or rec_x != rec_y or esc_x != esc_y:
            failures.append(row)
    return SemigroupConjugacyReport(Outcome.FAIL if failures else Outcome.PASS, worst, rows, failures)
