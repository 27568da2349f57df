import csv
import json

import pytest

from escapeset.cli import main
from escapeset.scenario import load_scenario, parse_scenario
from escapeset.errors import ScenarioError


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


BASE = {
    "schema_version": 1,
    "seed": 3,
    "systems": {"spiral": {"type": "spiral"}, "half": {"type": "semigroup", "generators": {"h": "x/2"}}},
    "requests": [
        {"id": "esc", "kind": "escape", "system": "spiral",
         "points": [{"polar": [2, 0], "expect": {"backward": "escaping"}}]},
        {"id": "sg", "kind": "semigroup", "system": "half", "params": {"budget": 3000, "eps": 0.01},
         "checks": ["omega"], "points": [{"coords": [1], "expect": {"omega_nonempty": True}}]},
    ],
}


def test_list_systems(capsys):
    assert main(["--list-systems"]) == 0
    out = capsys.readouterr().out
    for name in ("translation", "spiral", "r3saddle", "shift"):
        assert name in out


def test_run_writes_reports_and_summary(tmp_path):
    out = tmp_path / "out"
    assert main(["--scenario", write(tmp_path, BASE), "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"esc.csv", "esc.json", "sg.csv", "sg.json", "summary.csv",
                                              "summary.json"}
    summary = json.loads((out / "summary.json").read_text())
    assert [r["id"] for r in summary["requests"]] == ["esc", "sg"]
    assert summary["totals"] == {"pass": 2, "fail": 0, "skip": 0}
    report = json.loads((out / "sg.json").read_text())
    assert report["params"]["seeds"][0] == 3 and "family_size" in report["params"]
    rows = list(csv.DictReader((out / "esc.csv").open()))
    assert [(r["direction"], r["verdict"], r["outcome"]) for r in rows] == [
        ("forward", "non-escaping", ""), ("backward", "escaping", "pass")]


def test_seed_flag_overrides(tmp_path):
    out = tmp_path / "o"
    assert main(["--scenario", write(tmp_path, BASE), "--out", str(out), "--seed", "11"]) == 0
    assert json.loads((out / "sg.json").read_text())["params"]["seeds"][0] == 11


def test_failed_expectation_gives_exit_2(tmp_path):
    doc = json.loads(json.dumps(BASE))
    doc["requests"][0]["points"][0]["expect"] = {"backward": "non-escaping"}
    assert main(["--scenario", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 2


def test_undeclared_system_exits_1(tmp_path, capsys):
    doc = json.loads(json.dumps(BASE))
    doc["requests"][0]["system"] = "nowhere"
    assert main(["--scenario", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 1
    assert "nowhere" in capsys.readouterr().err


def test_parse_error_reports_line_and_column(tmp_path, capsys):
    assert main(["--scenario", write(tmp_path, '{\n  "schema_version": 1,\n  oops\n}')]) == 1
    assert "line 3, column 3" in capsys.readouterr().err


def test_missing_seed_for_stochastic_request(tmp_path):
    doc = json.loads(json.dumps(BASE))
    del doc["seed"]
    assert main(["--scenario", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 1
    assert main(["--scenario", write(tmp_path, doc), "--out", str(tmp_path / "o"), "--seed", "0"]) == 0


@pytest.mark.parametrize("mutate,needle", [
    (lambda d: d.update(schema_version=2), "schema_version"),
    (lambda d: d["requests"][0].update(kind="bogus"), "bogus"),
    (lambda d: d["requests"][0].update(params={"t_max": -1}), "t_max"),
    (lambda d: d["requests"][0].update(extra=1), "extra"),
    (lambda d: d["requests"].append(dict(d["requests"][0])), "duplicate"),
    (lambda d: d["systems"].update(bad={"type": "custom-map", "components": ["import(x)"]}), "bad"),
    (lambda d: d["requests"][1].update(checks=["omega", "nope"]), "nope"),
    (lambda d: d["requests"][0]["points"].append([1.0, 2.0, 3.0]), "dimension"),
])
def test_configuration_errors(mutate, needle):
    doc = json.loads(json.dumps(BASE))
    mutate(doc)
    with pytest.raises(ScenarioError, match=needle):
        parse_scenario(doc)


def test_bundled_scenario_loads():
    scn = load_scenario("paper_examples")
    assert scn.seed == 0 and len(scn.requests) >= 20
    assert {"translation", "spiral", "r3saddle", "shift"} <= set(scn.systems)
    kinds = {r.kind for r in scn.requests}
    assert kinds == {"escape", "omega", "alpha", "hyperspace", "semigroup", "conjugacy", "property-suite"}
