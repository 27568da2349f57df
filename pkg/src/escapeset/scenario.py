"""JSON scenario files: system declarations plus analysis requests.

Top-level keys::

    schema_version  1 (required)
    seed            integer, required when a request samples randomly
    output_dir      default report directory (the --out flag wins)
    systems         {name: {"type": ..., parameters}}
    requests        [{"id", "kind", "system", ...}]

See the README for every system type, point form and request kind.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ScenarioError
from .escape_analysis import AnalysisParams
from .expressions import CustomMap, ExpressionError
from .flows import (
    CustomODE,
    ExpressionFlow,
    FlowSystem,
    IntegratorSettings,
    MapSystem,
    R3Saddle,
    Shift,
    Spiral,
    SpiralODE,
    Translation,
    _x_spikes_rule,
    _y_countdown_rule,
)
from .hyperspace import FiniteCompact, HyperspaceParams
from .phase_space import (
    DEFAULT_HORIZON,
    Ball,
    Box,
    CompactExhaustion,
    EuclideanPoint,
    SymbolicPoint,
    ball_exhaustion,
    constant_sequence,
    cylinder_exhaustion,
)
from .semigroup import SCHEDULES, GeneratorSet, SemigroupParams
from .suites import SUITES

SCHEMA_VERSION = 1
KINDS = ("escape", "omega", "alpha", "hyperspace", "semigroup", "conjugacy", "property-suite")
SEMIGROUP_CHECKS = ("omega", "invariance", "recurrence", "recurrence-invariance", "escape", "closedness",
                    "precompact", "minimality")
BUNDLED = {"paper_examples": "paper_examples.json"}
EXAMPLE_SYSTEMS = {
    "translation": "translation flow x + c t (c = (1, 0)); every point escapes both ways",
    "spiral": "planar spiral with limit cycle |x| = 1, closed form; backward blowup for |x| > 1",
    "r3saddle": "vector field on R^3 whose escaping set is the z-axis (RK4, h = 1e-3)",
    "shift": "left shift on positive-integer sequences, checked against bounded cylinders",
}
SYMBOLIC_RULES = {"x_spikes": _x_spikes_rule, "y_countdown": _y_countdown_rule}


@dataclass
class Request:
    id: str
    kind: str
    system: str | None
    spec: dict  # the raw request block, validated


@dataclass
class Scenario:
    schema_version: int
    seed: int | None
    output_dir: str | None
    systems: dict
    system_specs: dict
    requests: list
    source: str = ""
    needs_seed: bool = field(default=False)


def _fail(msg: str, where: str = "") -> ScenarioError:
    return ScenarioError(f"{where}: {msg}" if where else msg)


def _num(v, where: str, *, positive=False, integer=False, lo=None, hi=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise _fail(f"expected a finite number, got {v!r}", where)
    if integer and int(v) != v:
        raise _fail(f"expected an integer, got {v!r}", where)
    if positive and v <= 0:
        raise _fail(f"must be > 0, got {v!r}", where)
    if lo is not None and v < lo:
        raise _fail(f"must be >= {lo}, got {v!r}", where)
    if hi is not None and v > hi:
        raise _fail(f"must be <= {hi}, got {v!r}", where)
    return int(v) if integer else float(v)


def _strs(v, where: str) -> list[str]:
    if isinstance(v, str):
        return [v]
    if not isinstance(v, list) or not all(isinstance(s, str) for s in v):
        raise _fail("expected a string or list of strings", where)
    return v


def _keys(block: dict, allowed: set, where: str):
    extra = set(block) - allowed
    if extra:
        raise _fail(f"unknown key(s) {sorted(extra)}", where)


# ------------------------------------------------------------------ systems


def _settings(spec: dict, where: str) -> IntegratorSettings:
    kw = {}
    if "h" in spec:
        kw["h"] = _num(spec["h"], f"{where}.h", positive=True)
    if "r_div" in spec:
        kw["r_div"] = _num(spec["r_div"], f"{where}.r_div", positive=True)
    return IntegratorSettings(**kw)


def build_system(name: str, spec: Any):
    where = f"systems.{name}"
    if not isinstance(spec, dict) or "type" not in spec:
        raise _fail("system needs an object with a 'type'", where)
    kind = spec["type"]
    try:
        if kind == "translation":
            _keys(spec, {"type", "c"}, where)
            c = spec.get("c", [1.0, 0.0])
            return Translation([_num(v, f"{where}.c") for v in c])
        if kind == "spiral":
            _keys(spec, {"type"}, where)
            return Spiral()
        if kind == "spiral-ode":
            _keys(spec, {"type", "h", "r_div"}, where)
            return SpiralODE(_settings(spec, where))
        if kind == "r3saddle":
            _keys(spec, {"type", "h", "r_div"}, where)
            return R3Saddle(_settings(spec, where))
        if kind == "shift":
            _keys(spec, {"type"}, where)
            return Shift()
        if kind == "custom-map":
            _keys(spec, {"type", "components", "variables", "inverse", "r_div"}, where)
            m = CustomMap(_strs(spec["components"], where), spec.get("variables"),
                          _strs(spec["inverse"], where) if "inverse" in spec else None, name=name)
            return MapSystem(m, _num(spec.get("r_div", 1e300), f"{where}.r_div", positive=True))
        if kind == "custom-ode":
            _keys(spec, {"type", "field", "variables", "h", "r_div"}, where)
            return CustomODE(CustomMap(_strs(spec["field"], where), spec.get("variables"), name=name),
                             _settings(spec, where))
        if kind == "expression-flow":
            _keys(spec, {"type", "components", "variables", "time_variable"}, where)
            return ExpressionFlow(_strs(spec["components"], where), spec.get("variables"),
                                  spec.get("time_variable", "t"), label=name)
        if kind == "semigroup":
            _keys(spec, {"type", "generators", "variables", "abelian"}, where)
            gens = spec["generators"]
            if not isinstance(gens, dict) or not gens:
                raise _fail("generators must be a nonempty {name: expression} object", where)
            return GeneratorSet.from_expressions({k: _strs(v, f"{where}.generators.{k}") for k, v in gens.items()},
                                                 spec.get("variables"), bool(spec.get("abelian", False)))
    except KeyError as exc:
        raise _fail(f"missing key {exc.args[0]!r}", where) from None
    except (ExpressionError, ValueError, TypeError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise _fail(str(exc), where) from None
    raise _fail(f"unknown system type {kind!r}", where)


def example_systems() -> dict:
    return {"translation": Translation([1.0, 0.0]), "spiral": Spiral(), "r3saddle": R3Saddle(), "shift": Shift()}


# ------------------------------------------------------------------- points


def parse_point(obj: Any, sys, where: str):
    """Returns ``(point, label, expect)``."""
    label, expect = None, {}
    if isinstance(obj, dict):
        _keys(obj, {"coords", "polar", "rule", "value", "horizon", "label", "expect"}, where)
        label = obj.get("label")
        expect = obj.get("expect", {})
        if not isinstance(expect, dict):
            raise _fail("expect must be an object", where)
        if "rule" in obj:
            horizon = _num(obj.get("horizon", DEFAULT_HORIZON), f"{where}.horizon", integer=True, lo=2)
            rule = obj["rule"]
            if rule == "constant":
                pt = constant_sequence(_num(obj.get("value", 1), f"{where}.value", integer=True, lo=1), horizon)
            elif rule in SYMBOLIC_RULES:
                pt = SymbolicPoint(SYMBOLIC_RULES[rule], horizon, name=rule)
            else:
                raise _fail(f"unknown sequence rule {rule!r} (known: constant, {', '.join(SYMBOLIC_RULES)})", where)
            label = label or rule
        elif "polar" in obj:
            r, th = (_num(v, f"{where}.polar") for v in obj["polar"])
            pt = Spiral.point(r, th)
            label = label or f"r0={r:g} theta={th:g}"
        elif "coords" in obj:
            pt = EuclideanPoint(tuple(_num(v, f"{where}.coords") for v in obj["coords"]))
        else:
            raise _fail("point needs 'coords', 'polar' or 'rule'", where)
    elif isinstance(obj, list):
        pt = EuclideanPoint(tuple(_num(v, where) for v in obj))
    else:
        raise _fail(f"cannot read a point from {obj!r}", where)
    symbolic = isinstance(pt, SymbolicPoint)
    if sys is not None:
        want_sym = getattr(sys, "symbolic", False)
        if symbolic != want_sym:
            raise _fail("point and system belong to different phase spaces", where)
        if not symbolic and pt.dim != sys.dim:
            raise _fail(f"point has dimension {pt.dim}, system has {sys.dim}", where)
    if label is None:
        label = "(" + ",".join(repr(float(c)) for c in pt.coords) + ")" if not symbolic else pt.name
    return pt, label, expect


def parse_exhaustion(block: Any, sys, where: str) -> CompactExhaustion:
    symbolic = getattr(sys, "symbolic", False)
    dim = sys.dim
    if block is None:
        return cylinder_exhaustion() if symbolic else ball_exhaustion(dim)
    if not isinstance(block, dict):
        raise _fail("exhaustion must be an object", where)
    _keys(block, {"type", "max_level", "center", "radius_step", "horizon"}, where)
    levels = _num(block.get("max_level", 10), f"{where}.max_level", integer=True, lo=1, hi=1000)
    kind = block.get("type", "cylinder" if symbolic else "ball")
    if kind == "ball" and not symbolic:
        step = _num(block.get("radius_step", 1.0), f"{where}.radius_step", positive=True)
        center = block.get("center")
        if center is not None and len(center) != dim:
            raise _fail("center dimension mismatch", where)
        return ball_exhaustion(dim, levels, (lambda m: step * m), center)
    if kind == "cylinder" and symbolic:
        horizon = _num(block.get("horizon", 4096), f"{where}.horizon", integer=True, lo=2)
        return cylinder_exhaustion(levels, horizon=horizon)
    raise _fail(f"exhaustion type {kind!r} does not fit this phase space", where)


def analysis_params(block: dict, where: str) -> AnalysisParams:
    kw = {}
    if block.get("t_max") is not None:
        kw["t_max"] = _num(block["t_max"], f"{where}.t_max", positive=True)
    if block.get("dt") is not None:
        kw["dt"] = _num(block["dt"], f"{where}.dt", positive=True)
    if "tail_fraction" in block:
        kw["tail_fraction"] = _num(block["tail_fraction"], f"{where}.tail_fraction", lo=0.0, hi=0.99)
    if "eps" in block:
        kw["eps"] = _num(block["eps"], f"{where}.eps", positive=True)
    return AnalysisParams(**kw)


def hyperspace_params(block: dict, where: str) -> HyperspaceParams:
    kw = {}
    if "window" in block:
        w = block["window"]
        if not isinstance(w, list) or len(w) != 2:
            raise _fail("window must be [start, stop]", where)
        i0 = _num(w[0], f"{where}.window", integer=True, lo=0)
        i1 = _num(w[1], f"{where}.window", integer=True, lo=i0 + 1, hi=10**6)
        kw["window"] = (i0, i1)
    if "eps" in block:
        kw["eps"] = _num(block["eps"], f"{where}.eps", positive=True)
    if "min_visits" in block:
        kw["min_visits"] = _num(block["min_visits"], f"{where}.min_visits", integer=True, lo=1)
    if "direction" in block:
        d = _num(block["direction"], f"{where}.direction", integer=True)
        if d not in (1, -1):
            raise _fail("direction must be 1 or -1", where)
        kw["direction"] = d
    return HyperspaceParams(**kw)


def semigroup_params(block: dict, seed: int | None, where: str) -> SemigroupParams:
    kw = {}
    for key, lo in (("k_terms", 2), ("m_min", 1), ("budget", 2)):
        if key in block:
            kw[key] = _num(block[key], f"{where}.{key}", integer=True, lo=lo, hi=10**8)
    if "eps" in block:
        kw["eps"] = _num(block["eps"], f"{where}.eps", positive=True)
    if "tail_fraction" in block:
        kw["tail_fraction"] = _num(block["tail_fraction"], f"{where}.tail_fraction", lo=0.0, hi=0.99)
    if "schedules" in block:
        bad = [s for s in block["schedules"] if s not in SCHEDULES]
        if bad or not block["schedules"]:
            raise _fail(f"schedules must be a nonempty subset of {list(SCHEDULES)}", where)
        kw["schedules"] = tuple(block["schedules"])
    if "filler_lengths" in block:
        kw["filler_lengths"] = tuple(_num(v, f"{where}.filler_lengths", integer=True, lo=0, hi=64)
                                     for v in block["filler_lengths"])
    n_seeds = _num(block.get("n_seeds", 8), f"{where}.n_seeds", integer=True, lo=1, hi=256)
    base = seed or 0
    kw["seeds"] = tuple(range(base, base + n_seeds))
    return SemigroupParams(**kw)


# ----------------------------------------------------------------- requests


_REQUEST_KEYS = {
    "escape": {"points", "params"},
    "omega": {"points", "params"},
    "alpha": {"points", "params"},
    "hyperspace": {"sets", "params"},
    "semigroup": {"points", "params", "checks", "bound", "set"},
    "conjugacy": {"target", "map", "points", "params"},
    "property-suite": {"suite", "params"},
}


def _validate_request(i: int, block: Any, systems: dict, seed: int | None) -> tuple[Request, bool]:
    where = f"requests[{i}]"
    if not isinstance(block, dict):
        raise _fail("request must be an object", where)
    kind = block.get("kind")
    if kind not in KINDS:
        raise _fail(f"unknown kind {kind!r} (expected one of {', '.join(KINDS)})", where)
    rid = block.get("id", f"{i:02d}-{kind}")
    if not isinstance(rid, str) or not rid or any(c in rid for c in "/\\") or rid.startswith("."):
        raise _fail(f"invalid id {rid!r}", where)
    where = f"requests[{i}] ({rid})"
    _keys(block, {"id", "kind", "system"} | _REQUEST_KEYS[kind], where)
    params = block.get("params", {})
    if not isinstance(params, dict):
        raise _fail("params must be an object", where)
    stochastic = False
    name = block.get("system")
    if kind == "property-suite":
        suite = block.get("suite")
        if suite not in SUITES:
            raise _fail(f"unknown suite {suite!r} (known: {', '.join(SUITES)})", where)
        stochastic = suite in {"escaping-sets", "hausdorff", "semigroup-invariance", "conjugacy"}
        return Request(rid, kind, None, block), stochastic
    if name not in systems:
        raise _fail(f"undeclared system {name!r}", where)
    sys = systems[name]
    is_group = isinstance(sys, GeneratorSet)
    if kind == "semigroup" and not is_group:
        raise _fail(f"system {name!r} is not a semigroup", where)
    if kind in ("escape", "omega", "alpha", "hyperspace") and is_group:
        raise _fail(f"{kind} needs a flow or map, {name!r} is a semigroup", where)
    if kind == "alpha" and not sys.invertible:
        raise _fail(f"system {name!r} is not invertible", where)
    if kind == "hyperspace" and sys.symbolic:
        raise _fail("hyperspace requests need a Euclidean system", where)
    if kind == "conjugacy":
        target = block.get("target")
        if target not in systems:
            raise _fail(f"undeclared target system {target!r}", where)
        if isinstance(systems[target], GeneratorSet) != is_group:
            raise _fail("source and target must both be flows or both be semigroups", where)
        if not isinstance(block.get("map"), dict):
            raise _fail("conjugacy needs a 'map' object with components and inverse", where)
        if getattr(sys, "symbolic", False) or getattr(systems[target], "symbolic", False):
            raise _fail("conjugacy requests need Euclidean systems", where)
        if systems[target].dim != sys.dim:
            raise _fail("source and target have different dimensions", where)
        parse_map(block["map"], sys.dim, f"{where}.map")
        stochastic = is_group
    if kind == "semigroup":
        checks = block.get("checks", ["omega", "recurrence", "escape"])
        bad = [c for c in checks if c not in SEMIGROUP_CHECKS]
        if bad:
            raise _fail(f"unknown semigroup check(s) {bad} (known: {', '.join(SEMIGROUP_CHECKS)})", where)
        stochastic = True
    # parse everything now so configuration errors surface before any work starts
    for j, p in enumerate(block.get("points", [])):
        parse_point(p, sys, f"{where}.points[{j}]")
    if kind in ("escape", "omega", "alpha", "hyperspace", "conjugacy") and not is_group:
        parse_exhaustion(params.get("exhaustion"), sys, f"{where}.params.exhaustion")
        analysis_params(params, f"{where}.params")
    if kind == "hyperspace":
        hyperspace_params(params, f"{where}.params")
        sets = block.get("sets")
        if not isinstance(sets, list) or not sets:
            raise _fail("hyperspace needs a nonempty list of sets", where)
        for j, s in enumerate(sets):
            parse_set(s, sys, f"{where}.sets[{j}]")
    if kind in ("semigroup", "conjugacy") and is_group:
        semigroup_params(params, seed, f"{where}.params")
    if kind in ("omega", "alpha"):
        for key in ("t_tail",):
            if key in params:
                _num(params[key], f"{where}.params.{key}", lo=0.0)
        if "min_visits" in params:
            _num(params["min_visits"], f"{where}.params.min_visits", integer=True, lo=1)
    return Request(rid, kind, name, block), stochastic


def parse_map(block: Any, dim: int, where: str) -> CustomMap:
    """Conjugacy map ``{"components", "variables"?, "inverse"?, "name"?}``."""
    if not isinstance(block, dict):
        raise _fail("map must be an object", where)
    _keys(block, {"components", "variables", "inverse", "name"}, where)
    if "components" not in block:
        raise _fail("map needs 'components'", where)
    try:
        cm = CustomMap(_strs(block["components"], f"{where}.components"), block.get("variables"),
                       _strs(block["inverse"], f"{where}.inverse") if "inverse" in block else None,
                       name=block.get("name", "h"))
    except (ExpressionError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise _fail(str(exc), where) from None
    if cm.dim != dim:
        raise _fail(f"map acts on R^{cm.dim}, the systems on R^{dim}", where)
    return cm


def parse_set(obj: Any, sys, where: str):
    """``(FiniteCompact, label, expect)`` from a list of points or ``{"points", "label", "expect"}``."""
    label, expect = None, {}
    if isinstance(obj, dict):
        _keys(obj, {"points", "label", "expect"}, where)
        label, expect, pts = obj.get("label"), obj.get("expect", {}), obj.get("points")
    else:
        pts = obj
    if not isinstance(pts, list) or not pts:
        raise _fail("a set needs a nonempty list of points", where)
    parsed = [parse_point(p, sys, f"{where}[{k}]") for k, p in enumerate(pts)]
    fc = FiniteCompact([p for p, _, _ in parsed], label or "")
    return fc, label or "{" + "; ".join(lbl for _, lbl, _ in parsed) + "}", expect


def parse_region(block: Any, dim: int, where: str):
    if not isinstance(block, dict):
        raise _fail("region must be an object", where)
    if block.get("type") == "ball":
        c = block.get("center", [0.0] * dim)
        if len(c) != dim:
            raise _fail("center dimension mismatch", where)
        return Ball(tuple(_num(v, where) for v in c), _num(block.get("radius"), f"{where}.radius", positive=True))
    if block.get("type") == "box":
        iv = block.get("intervals")
        if not isinstance(iv, list) or len(iv) != dim:
            raise _fail("box needs one [lo, hi] interval per coordinate", where)
        return Box(tuple((_num(a, where), _num(b, where)) for a, b in iv))
    raise _fail("region type must be 'ball' or 'box'", where)


def parse_scenario(doc: Any, source: str = "") -> Scenario:
    if not isinstance(doc, dict):
        raise _fail("scenario must be a JSON object")
    _keys(doc, {"schema_version", "seed", "output_dir", "systems", "requests", "description"}, "scenario")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise _fail(f"unsupported schema_version {version!r} (this build reads {SCHEMA_VERSION})")
    seed = doc.get("seed")
    if seed is not None:
        seed = _num(seed, "seed", integer=True, lo=0, hi=2**64 - 1)
    specs = doc.get("systems", {})
    if not isinstance(specs, dict):
        raise _fail("systems must be an object")
    systems = {name: build_system(name, spec) for name, spec in specs.items()}
    reqs = doc.get("requests")
    if not isinstance(reqs, list) or not reqs:
        raise _fail("requests must be a nonempty list")
    parsed, needs_seed, ids = [], False, set()
    for i, block in enumerate(reqs):
        req, stochastic = _validate_request(i, block, systems, seed)
        if req.id in ids:
            raise _fail(f"duplicate request id {req.id!r}", f"requests[{i}]")
        ids.add(req.id)
        parsed.append(req)
        needs_seed |= stochastic
    return Scenario(version, seed, doc.get("output_dir"), systems, specs, parsed, source, needs_seed)


def load_scenario(path_or_name: str) -> Scenario:
    """Read a scenario file, or a bundled scenario by name (e.g. ``paper_examples``)."""
    if path_or_name in BUNDLED:
        text = resources.files("escapeset.scenarios").joinpath(BUNDLED[path_or_name]).read_text(encoding="utf-8")
        source = path_or_name
    else:
        p = Path(path_or_name)
        if not p.is_file():
            raise _fail(f"scenario file not found: {path_or_name}")
        text = p.read_text(encoding="utf-8")
        source = str(p)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(doc, source)
