"""Reference corpora: the example systems with points, sets and semigroups
whose behaviour is known in closed form. Property suites and the bundled
scenario run over these."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .escape_analysis import AnalysisParams
from .expressions import CustomMap
from .flows import ExpressionFlow, FlowSystem, MapSystem, R3Saddle, Shift, Spiral, Translation, example_shift_points
from .hyperspace import FiniteCompact, HyperspaceParams
from .phase_space import Ball, CompactExhaustion, ball_exhaustion, constant_sequence, cylinder_exhaustion
from .semigroup import GeneratorSet

GOLDEN = (1 + math.sqrt(5)) / 2
GOLDEN_ANGLE = 2 * math.pi / GOLDEN


def default_exhaustion(sys: FlowSystem, max_level: int = 10) -> CompactExhaustion:
    return cylinder_exhaustion(max_level) if sys.symbolic else ball_exhaustion(sys.dim, max_level)


def rotation_map(angle: float, variables=("x", "y")) -> CustomMap:
    c, s = repr(math.cos(angle)), repr(math.sin(angle))
    x, y = variables
    return CustomMap([f"{c}*{x} - {s}*{y}", f"{s}*{x} + {c}*{y}"], list(variables),
                     inverse=[f"{c}*{x} + {s}*{y}", f"-{s}*{x} + {c}*{y}"], name=f"rotation({angle:.6g})")


def circle_points(n: int, phase: float = 0.0) -> np.ndarray:
    t = phase + np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return np.column_stack([np.cos(t), np.sin(t)])


@dataclass
class DualityCase:
    label: str
    system: FlowSystem
    point: object
    exhaustion: CompactExhaustion
    params: AnalysisParams = field(default_factory=AnalysisParams)


def duality_corpus() -> list[DualityCase]:
    tr, sp, r3, sh = Translation([1.0, 0.0]), Spiral(), R3Saddle(), Shift()
    px, py = example_shift_points()
    cases = [
        ("translation (0,0)", tr, (0.0, 0.0)),
        ("translation (3,-1)", tr, (3.0, -1.0)),
        ("spiral r0=0.5", sp, Spiral.point(0.5)),
        ("spiral r0=1", sp, Spiral.point(1.0)),
        ("spiral r0=2", sp, Spiral.point(2.0)),
        ("spiral r0=3 theta=1", sp, Spiral.point(3.0, 1.0)),
        ("r3saddle (0,0,1)", r3, (0.0, 0.0, 1.0)),
        ("r3saddle (0,0,-2)", r3, (0.0, 0.0, -2.0)),
        ("r3saddle (0.5,0,0)", r3, (0.5, 0.0, 0.0)),
        ("r3saddle (1,1,0.5)", r3, (1.0, 1.0, 0.5)),
        ("shift x", sh, px),
        ("shift y", sh, py),
        ("shift all-ones", sh, constant_sequence(1)),
    ]
    return [DualityCase(label, s, p, default_exhaustion(s)) for label, s, p in cases]


@dataclass
class HyperspaceCase:
    label: str
    system: FlowSystem
    set: FiniteCompact
    exhaustion: CompactExhaustion
    params: HyperspaceParams
    expected: bool  # every point escapes in the chosen direction


def _polar(*pairs) -> list:
    return [Spiral.point(r, th).coords for r, th in pairs]


def hyperspace_corpus() -> list[HyperspaceCase]:
    tr, sp, r3 = Translation([1.0, 0.0]), Spiral(), R3Saddle()
    doubling = MapSystem(CustomMap(["2*x"], ["x"], inverse=["x/2"], name="2x"))
    fwd, bwd = HyperspaceParams(), HyperspaceParams(direction=-1)
    # off-axis r3saddle orbits wind around tori, so they need a coarser radius and a longer window
    torus = HyperspaceParams(window=(200, 2000), eps=0.5)
    rows = [
        ("spiral backward {r0=2, r0=3}", sp, _polar((2, 0), (3, 1)), bwd, True),
        ("spiral backward {r0=1.5}", sp, _polar((1.5, 0)), bwd, True),
        ("spiral backward {r0=1.2, r0=2.5}", sp, _polar((1.2, 0.5), (2.5, 2)), bwd, True),
        ("spiral backward {r0=0.5}", sp, _polar((0.5, 0)), bwd, False),
        ("spiral backward {r0=0.5, r0=0.7}", sp, _polar((0.5, 0), (0.7, 2)), bwd, False),
        ("spiral backward {r0=1}", sp, _polar((1, 0)), bwd, False),
        ("spiral backward mixed {r0=0.5, r0=2}", sp, _polar((0.5, 0), (2, 0)), bwd, False),
        ("spiral backward mixed {r0=1, r0=3}", sp, _polar((1, 0), (3, 1)), bwd, False),
        ("spiral forward {r0=0.5, r0=2}", sp, _polar((0.5, 0), (2, 0)), fwd, False),
        ("spiral forward {r0=3}", sp, _polar((3, 1)), fwd, False),
        ("translation {(0,0)}", tr, [(0.0, 0.0)], fwd, True),
        ("translation {(0,0),(1,1)}", tr, [(0.0, 0.0), (1.0, 1.0)], fwd, True),
        ("translation {(-5,2),(3,3),(0,1)}", tr, [(-5.0, 2.0), (3.0, 3.0), (0.0, 1.0)], fwd, True),
        ("translation backward {(0,0),(2,-1)}", tr, [(0.0, 0.0), (2.0, -1.0)], bwd, True),
        ("r3saddle axis {(0,0,0),(0,0,1)}", r3, [(0.0, 0.0, 0.0), (0.0, 0.0, 1.0)], fwd, True),
        ("r3saddle off-axis {(0.5,0,0),(1,1,0.5)}", r3, [(0.5, 0.0, 0.0), (1.0, 1.0, 0.5)], torus, False),
        ("r3saddle off-axis {(2,0,1)}", r3, [(2.0, 0.0, 1.0)], torus, False),
        ("r3saddle mixed {(0,0,0),(0.5,0,0)}", r3, [(0.0, 0.0, 0.0), (0.5, 0.0, 0.0)], torus, False),
        ("r3saddle mixed {(0,0,-1),(1,1,0.5)}", r3, [(0.0, 0.0, -1.0), (1.0, 1.0, 0.5)], torus, False),
        ("doubling {1, 2}", doubling, [(1.0,), (2.0,)], fwd, True),
        ("doubling {0}", doubling, [(0.0,)], fwd, False),
        ("doubling mixed {0, 1}", doubling, [(0.0,), (1.0,)], fwd, False),
    ]
    return [HyperspaceCase(label, s, FiniteCompact(np.array(pts, dtype=float), label), default_exhaustion(s), p, e)
            for label, s, pts, p, e in rows]


@dataclass
class SemigroupCase:
    label: str
    generators: GeneratorSet
    points: list
    bound: Ball | None = None  # compact set containing the orbit, when there is one


def semigroup_corpus() -> list[SemigroupCase]:
    gen = GeneratorSet.from_expressions
    golden = rotation_map(GOLDEN_ANGLE)
    sqrt2 = rotation_map(2 * math.pi / math.sqrt(2))
    return [
        SemigroupCase("<x/2>", gen({"half": "x/2"}), [[1.0], [0.0], [-3.0]], Ball((0.0,), 3.0)),
        SemigroupCase("<x/2, x/3>", gen({"half": "x/2", "third": "x/3"}, abelian=True), [[1.0], [-2.0]],
                      Ball((0.0,), 2.0)),
        SemigroupCase("<x+1>", gen({"succ": "x+1"}), [[0.0], [-4.0]]),
        SemigroupCase("<x+1, x+2>", gen({"plus1": "x+1", "plus2": "x+2"}, abelian=True), [[0.0], [-3.0]]),
        SemigroupCase("<2x, x+1>", gen({"double": "2*x", "succ": "x+1"}), [[1.0], [0.0]]),
        SemigroupCase("<golden rotation>", GeneratorSet((golden,), ("rot",), abelian=True),
                      [[1.0, 0.0], list(circle_points(1, 1.0)[0])], Ball((0.0, 0.0), 1.0 + 1e-9)),
        SemigroupCase("<two rotations>", GeneratorSet((golden, sqrt2), ("rot_golden", "rot_sqrt2"), abelian=True),
                      [[1.0, 0.0]], Ball((0.0, 0.0), 1.0 + 1e-9)),
    ]


@dataclass
class FlowConjugacyCase:
    label: str
    source: FlowSystem
    target: FlowSystem
    h: CustomMap
    samples: list
    exhaustion: CompactExhaustion


def flow_conjugacy_corpus() -> list[FlowConjugacyCase]:
    line = Translation([1.0])
    cubed = ExpressionFlow(["(cbrt(x) + t)**3"], ["x"], label="cube-conjugate translation")
    rot = rotation_map(1.0)
    return [
        FlowConjugacyCase("translation vs cube conjugate", line, cubed, CustomMap(["x**3"], ["x"], inverse=["cbrt(x)"]),
                          [[-2.0], [0.0], [0.5], [1.5]], ball_exhaustion(1)),
        FlowConjugacyCase("spiral vs rotated spiral", Spiral(), Spiral(), rot,
                          [Spiral.point(0.5).coords, Spiral.point(2.0, 1.0).coords, Spiral.point(1.0).coords],
                          ball_exhaustion(2)),
    ]


@dataclass
class SemigroupConjugacyCase:
    label: str
    source: GeneratorSet
    target: GeneratorSet
    rho: CustomMap
    samples: list
    exhaustion: CompactExhaustion


def semigroup_conjugacy_corpus() -> list[SemigroupConjugacyCase]:
    gen = GeneratorSet.from_expressions
    return [
        SemigroupConjugacyCase("<2x> vs <2y-1> via x+1", gen({"double": "2*x"}), gen({"double": "2*x - 1"}),
                               CustomMap(["x+1"], ["x"], inverse=["x-1"]), [[0.0], [0.5], [-1.0]], ball_exhaustion(1)),
        SemigroupConjugacyCase("<x/2> vs cube conjugate via x^3", gen({"half": "x/2"}),
                               gen({"half": "(cbrt(x)/2)**3"}), CustomMap(["x**3"], ["x"], inverse=["cbrt(x)"]),
                               [[1.0], [-2.0]], ball_exhaustion(1)),
    ]


def identity_systems() -> list[tuple[str, FlowSystem, list]]:
    """Every example system with sample points, for the identity self-test."""
    px, py = example_shift_points()
    return [
        ("translation", Translation([1.0, 0.0]), [(0.0, 0.0), (2.0, -1.0)]),
        ("spiral", Spiral(), [Spiral.point(0.5).coords, Spiral.point(2.0).coords]),
        ("r3saddle", R3Saddle(), [(0.0, 0.0, 0.0), (0.5, 0.0, 0.0)]),
        ("shift", Shift(), [px, py]),
        ("doubling", MapSystem(CustomMap(["2*x"], ["x"], inverse=["x/2"], name="2x")), [(0.0,), (1.0,)]),
    ]
