"""Scenario-driven batch runner.

    escapeset --scenario paper_examples --out reports/ --seed 0
    escapeset --list-systems

Exit status: 0 when no check failed, 2 when at least one did, 1 on
configuration errors (unreadable scenario, undeclared names, bad ranges).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DynamicsError, NotInvariant, OrbitNotBounded, ScenarioError
from .escape_analysis import (
    Outcome,
    Verdict,
    check_conjugacy_transport,
    classify_escape_many,
    estimate_alpha,
    estimate_omega,
)
from .expressions import ExpressionError
from .hyperspace import check_hyperspace_escape_equivalence
from .phase_space import SymbolicPoint
from .scenario import (
    EXAMPLE_SYSTEMS,
    Request,
    Scenario,
    analysis_params,
    hyperspace_params,
    load_scenario,
    parse_exhaustion,
    parse_map,
    parse_point,
    parse_region,
    parse_set,
    semigroup_params,
)
from .semigroup import (
    GeneratorSet,
    check_closedness,
    check_minimality,
    check_omega_invariance,
    check_precompact_nonempty,
    check_recurrence,
    check_recurrence_invariance,
    check_semigroup_conjugacy,
    classify_escape_G,
    estimate_omega_G,
)
from .suites import SEEDED, SUITES

log = logging.getLogger("escapeset")


# ------------------------------------------------------------- plain data


def plain(v):
    """JSON-ready copy with enums, numpy values and non-finite floats normalized."""
    if isinstance(v, Enum):
        return v.value
    if isinstance(v, dict):
        return {str(k): plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return plain(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, SymbolicPoint):
        return {"sequence": v.name or "rule", "prefix": v.prefix(min(8, v.horizon)).tolist()}
    return v


def _cell(v) -> str:
    v = plain(v)
    if v is None:
        return ""
    if isinstance(v, (list, dict)):
        return json.dumps(v, separators=(",", ":"))
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _expect_outcome(expected, got) -> Outcome | None:
    if expected is None:
        return None
    return Outcome.PASS if expected == got else Outcome.FAIL


# --------------------------------------------------------------- handlers


def _points(req: Request, sys_):
    return [parse_point(p, sys_, f"{req.id}.points[{j}]") for j, p in enumerate(req.spec.get("points", []))]


def run_escape(req, scn, seed):
    sys_ = scn.systems[req.system]
    params = req.spec.get("params", {})
    ap = analysis_params(params, req.id).resolved(sys_)
    exh = parse_exhaustion(params.get("exhaustion"), sys_, req.id)
    pts = _points(req, sys_)
    verdicts = classify_escape_many(sys_, [p for p, _, _ in pts], exh, ap.t_max, dt=ap.dt,
                                    tail_fraction=ap.tail_fraction)
    rows = []
    for (p, label, expect), v in zip(pts, verdicts):
        for direction, verdict, rep in (("forward", v.forward, v.forward_report),
                                        ("backward", v.backward, v.backward_report)):
            if verdict is Verdict.NOT_APPLICABLE and direction not in expect:
                continue
            want = expect.get(direction)
            rows.append({"point": label, "direction": direction, "verdict": verdict,
                         "exit_times": rep.exit_times if rep else None,
                         "reentry_times": [w.reentry_time for w in rep.witnesses] if rep else None,
                         "blowup_time": rep.blowup_time if rep else None, "note": rep.note if rep else "",
                         "expected": want, "outcome": _expect_outcome(want, verdict.value)})
    return rows, {**ap.to_dict(), "exhaustion": exh.describe(), "exhaustion_spec": params.get("exhaustion")}


def _limit_rows(label, est, expect):
    want = expect.get("empty")
    rows = [{"point": label, "row": "summary", "n_clusters": len(est), "unclustered": est.unclustered,
             "empty": est.empty, "expected_empty": want, "outcome": _expect_outcome(want, est.empty)}]
    for k, (c, n) in enumerate(zip(est.centers, est.counts or [None] * len(est))):
        row = {"point": label, "row": "cluster", "cluster": k, "visits": n}
        if isinstance(c, SymbolicPoint):
            row["cluster_prefix"] = c.prefix(min(16, c.horizon)).tolist()
        else:
            for i, x in enumerate(np.atleast_1d(c)):
                row[f"x{i}"] = float(x)
        rows.append(row)
    return rows


def run_limit(req, scn, seed):
    sys_ = scn.systems[req.system]
    params = req.spec.get("params", {})
    ap = analysis_params(params, req.id).resolved(sys_)
    exh = parse_exhaustion(params.get("exhaustion"), sys_, req.id)
    t_tail = float(params.get("t_tail", ap.tail_fraction * ap.t_max))
    if not t_tail < ap.t_max:
        raise ScenarioError(f"{req.id}: t_tail must be below t_max")
    min_visits = int(params.get("min_visits", 1))
    fn = estimate_omega if req.kind == "omega" else estimate_alpha
    rows = []
    for p, label, expect in _points(req, sys_):
        est = fn(sys_, p, t_tail, ap.t_max, ap.eps, exh=exh, dt=ap.dt, min_visits=min_visits)
        rows.extend(_limit_rows(label, est, expect))
    return rows, {**ap.to_dict(), "t_tail": t_tail, "min_visits": min_visits, "exhaustion": exh.describe(),
                  "exhaustion_spec": params.get("exhaustion")}


def run_hyperspace(req, scn, seed):
    sys_ = scn.systems[req.system]
    params = req.spec.get("params", {})
    hp = hyperspace_params(params, req.id)
    exh = parse_exhaustion(params.get("exhaustion"), sys_, req.id)
    rows = []
    for j, s in enumerate(req.spec["sets"]):
        fc, label, expect = parse_set(s, sys_, f"{req.id}.sets[{j}]")
        r = check_hyperspace_escape_equivalence(sys_, fc, exh, hp)
        outcome = r.outcome
        want = expect.get("all_escape")
        if want is not None and r.resolved and r.p1_all_escape != want:
            outcome = Outcome.FAIL
        rows.append({"set": label, "size": len(fc), "p1_all_escape": r.p1_all_escape,
                     "p3_limsup_empty": r.p3_limsup_empty, "p4_hyperspace_escape": r.p4_hyperspace_escape,
                     "agree": r.agree, "exit_indices": r.exit_indices, "expected_all_escape": want,
                     "outcome": outcome})
    return rows, {**hp.to_dict(), "exhaustion": exh.describe(), "exhaustion_spec": params.get("exhaustion")}


def run_semigroup(req, scn, seed):
    G: GeneratorSet = scn.systems[req.system]
    params = req.spec.get("params", {})
    sp = semigroup_params(params, seed, req.id)
    from .phase_space import ball_exhaustion

    exh = ball_exhaustion(G.dim, int(params.get("max_level", 10)))
    checks = req.spec.get("checks", ["omega", "recurrence", "escape"])
    rows = []

    def add(label, check, result, outcome, **detail):
        rows.append({"point": label, "check": check, "result": result, "outcome": outcome, **detail})

    for p, label, expect in _points(req, G):
        x = p.array
        for check in checks:
            if check == "omega":
                est = estimate_omega_G(G, x, sp)
                want = expect.get("omega_nonempty")
                add(label, check, len(est), _expect_outcome(want, not est.empty),
                    clusters=[c.tolist() for c in est.centers[:32]], visits=list(est.counts[:32]),
                    unclustered=est.unclustered)
            elif check == "invariance":
                ok = check_omega_invariance(G, x, sp)
                add(label, check, ok, Outcome.PASS if ok else Outcome.FAIL)
            elif check == "recurrence":
                rec = check_recurrence(G, x, sp)
                add(label, check, rec, _expect_outcome(expect.get("recurrent"), rec))
            elif check == "recurrence-invariance":
                add(label, check, None, check_recurrence_invariance(G, x, sp))
            elif check == "escape":
                v = classify_escape_G(G, x, exh, sp)
                want = expect.get("escape")
                outcome = Outcome.PASS if v.invariance_ok else Outcome.FAIL
                if want is not None and want != v.verdict.value:
                    outcome = Outcome.FAIL
                add(label, check, v.verdict, outcome, companions=v.companions, expected=want)
            elif check == "closedness":
                ok = check_closedness(G, x, sp)
                add(label, check, ok, Outcome.PASS if ok else Outcome.FAIL)
            elif check == "precompact":
                if "bound" not in req.spec:
                    raise ScenarioError(f"{req.id}: the precompact check needs a 'bound' region")
                bound = parse_region(req.spec["bound"], G.dim, f"{req.id}.bound")
                try:
                    res = check_precompact_nonempty(G, x, bound, sp)
                except OrbitNotBounded:
                    res = "orbit-not-bounded"
                want = expect.get("precompact")
                add(label, check, res, _expect_outcome(want, res) if want is not None
                    else (Outcome.SKIP if res == "orbit-not-bounded" else Outcome.PASS if res else Outcome.FAIL))
    if "minimality" in checks:
        if "set" not in req.spec:
            raise ScenarioError(f"{req.id}: the minimality check needs a 'set'")
        fc, label, expect = parse_set(req.spec["set"], G, f"{req.id}.set")
        try:
            res = check_minimality(G, fc.points, sp)
        except NotInvariant:
            res = "not-invariant"
        add(label, "minimality", res, _expect_outcome(expect.get("minimal"), res))
    return rows, {**sp.to_dict(G), "generators": G.describe(), "exhaustion": exh.describe()}


def run_conjugacy(req, scn, seed):
    src, dst = scn.systems[req.system], scn.systems[req.spec["target"]]
    params = req.spec.get("params", {})
    h = parse_map(req.spec["map"], src.dim, f"{req.id}.map")
    pts = _points(req, src)
    if isinstance(src, GeneratorSet):
        sp = semigroup_params(params, seed, req.id)
        from .phase_space import ball_exhaustion

        exh = ball_exhaustion(src.dim, int(params.get("max_level", 10)))
        r = check_semigroup_conjugacy(src, dst, h, [p.array for p, _, _ in pts], exh, sp)
        rows = [{"point": label, **row, "outcome": Outcome.FAIL if row in r.failures else Outcome.PASS}
                for (_, label, _), row in zip(pts, r.rows)]
        return rows, {**sp.to_dict(src), "residual": r.max_residual, "map": h.to_dict(), "exhaustion": exh.describe()}
    ap = analysis_params(params, req.id)
    exh = parse_exhaustion(params.get("exhaustion"), src, req.id)
    r = check_conjugacy_transport(src, dst, h, [p for p, _, _ in pts], exh, ap)
    rows = []
    for (_, label, _), (x, va, vb) in zip(pts, r.pairs):
        misses = [z for (xx, z) in r.omega_misses if xx == x]
        ok = va == vb and not misses
        rows.append({"point": label, "source_forward": va[0], "source_backward": va[1], "target_forward": vb[0],
                     "target_backward": vb[1], "omega_misses": len(misses),
                     "outcome": Outcome.PASS if ok else Outcome.FAIL})
    return rows, {**ap.resolved(src).to_dict(), "map": h.to_dict(), "exhaustion": exh.describe(),
                  "inverse_residual": r.max_inverse_residual, "conjugacy_residual": r.max_conjugacy_residual,
                  "omega_clusters": r.omega_clusters}


def run_suite(req, scn, seed):
    name = req.spec["suite"]
    kwargs = dict(req.spec.get("params", {}))
    if name in SEEDED:
        kwargs["seed"] = seed
    try:
        res = SUITES[name](**kwargs)
    except TypeError as exc:
        raise ScenarioError(f"{req.id}: bad parameters for suite {name!r}: {exc}") from None
    return res.rows, {"suite": name, **res.params, **({"seed": seed} if name in SEEDED else {})}


HANDLERS = {"escape": run_escape, "omega": run_limit, "alpha": run_limit, "hyperspace": run_hyperspace,
            "semigroup": run_semigroup, "conjugacy": run_conjugacy, "property-suite": run_suite}


# ----------------------------------------------------------------- output


def _counts(rows) -> dict:
    c = {o.value: 0 for o in Outcome}
    for r in rows:
        o = r.get("outcome")
        if isinstance(o, Outcome):
            c[o.value] += 1
    return c


def write_csv(path: Path, rows: list[dict]):
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_json(path: Path, obj):
    path.write_text(json.dumps(plain(obj), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _describe(system):
    return system.describe() if hasattr(system, "describe") else {}


def run_scenario(scn: Scenario, out_dir: Path, seed: int | None) -> dict:
    if seed is None:
        seed = scn.seed
    if seed is None and scn.needs_seed:
        raise ScenarioError("scenario samples randomly; give a 'seed' or pass --seed")
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    for req in scn.requests:
        t0 = time.perf_counter()
        log.info("running %s (%s)", req.id, req.kind)
        rows, resolved = HANDLERS[req.kind](req, scn, seed)
        counts = _counts(rows)
        report = {"id": req.id, "kind": req.kind, "system": req.system,
                  "system_spec": scn.system_specs.get(req.system), "params": resolved, "counts": counts,
                  "rows": rows}
        if req.kind == "conjugacy":
            report["target_spec"] = scn.system_specs.get(req.spec["target"])
        write_json(out_dir / f"{req.id}.json", report)
        write_csv(out_dir / f"{req.id}.csv", rows)
        summary.append({"id": req.id, "kind": req.kind, "system": req.system or req.spec.get("suite"), **counts})
        log.info("%s: %s in %.2fs", req.id, counts, time.perf_counter() - t0)
    totals = {o.value: sum(s[o.value] for s in summary) for o in Outcome}
    doc = {"scenario": scn.source, "schema_version": scn.schema_version, "seed": seed, "requests": summary,
           "totals": totals}
    write_json(out_dir / "summary.json", doc)
    write_csv(out_dir / "summary.csv", summary)
    return doc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="escapeset", description="Classify escape and limit behaviour "
                                "of points and semigroup orbits from a JSON scenario.")
    p.add_argument("--scenario", help="scenario file, or the name of a bundled scenario (paper_examples)")
    p.add_argument("--out", help="report directory (default: the scenario's output_dir, else ./escapeset-out)")
    p.add_argument("--seed", type=int, help="global seed; overrides the scenario's seed")
    p.add_argument("--list-systems", action="store_true", help="print the built-in example systems and exit")
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s",
                        stream=sys.stderr)
    if args.list_systems:
        for name, text in EXAMPLE_SYSTEMS.items():
            print(f"{name:12s} {text}")
        print("\nscenario system types: translation, spiral, spiral-ode, r3saddle, shift, custom-map, "
              "custom-ode, expression-flow, semigroup")
        return 0
    if not args.scenario:
        print("error: --scenario is required (or use --list-systems)", file=sys.stderr)
        return 1
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 1
    try:
        scn = load_scenario(args.scenario)
        out = Path(args.out or scn.output_dir or "escapeset-out")
        doc = run_scenario(scn, out, args.seed)
    except (ScenarioError, ExpressionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DynamicsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    t = doc["totals"]
    print(f"{len(doc['requests'])} requests: {t['pass']} passed, {t['fail']} failed, {t['skip']} skipped -> {out}")
    return 2 if t["fail"] else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
