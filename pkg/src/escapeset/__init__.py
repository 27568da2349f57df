"""Finite-horizon escape, limit-set and recurrence analysis for flows,
hyperspace maps and finitely generated semigroups."""

from ._kernels import BACKEND
from .errors import (
    DomainError,
    DynamicsError,
    HorizonExhausted,
    NotAConjugacy,
    NotInvariant,
    OrbitNotBounded,
    ScenarioError,
)
from .escape_analysis import (
    AnalysisParams,
    LimitSetEstimate,
    Outcome,
    Verdict,
    check_conjugacy_transport,
    check_minimal_orbit,
    check_omega_escape_duality,
    classify_escape,
    classify_escape_many,
    estimate_alpha,
    estimate_omega,
)
from .expressions import CustomMap
from .flows import CustomODE, ExpressionFlow, MapSystem, R3Saddle, Shift, Spiral, SpiralODE, Translation
from .hyperspace import (
    FiniteCompact,
    HyperspaceParams,
    check_hyperspace_escape_equivalence,
    estimate_omega_K,
    hausdorff_distance,
    induced_map,
)
from .phase_space import (
    Ball,
    Box,
    CompactExhaustion,
    Cylinder,
    EuclideanPoint,
    SymbolicPoint,
    ball_exhaustion,
    cylinder_exhaustion,
    distance,
)
from .semigroup import (
    GeneratorSet,
    SemigroupParams,
    SemigroupWord,
    UnboundedSequenceSpec,
    apply_word,
    check_minimality,
    check_omega_invariance,
    check_recurrence,
    check_semigroup_conjugacy,
    classify_escape_G,
    estimate_omega_G,
    sample_orbit,
)

__version__ = "0.1.0"
