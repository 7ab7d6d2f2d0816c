import json

import pytest

from isoflow.main import parse_config
from isoflow.models.flow import Route
from isoflow.models.scenario import Check, CheckStatus, Scenario, ScenarioKind, ScenarioResult
from isoflow.utils.errors import ConfigParseError, ParameterViolation


def flow_run(**extra) -> dict:
    data = {"schema_version": 1, "kind": "FlowRun", "family": {"name": "S2xS1", "params": {"b": 1.0}}}
    data.update(extra)
    return data


def test_minimal_flow_run_gets_defaults(verifier):
    scenario = parse_config(json.dumps(flow_run()), verifier)
    assert scenario.id == "run"
    assert scenario.route == Route.CATALOG
    assert scenario.samples == 200
    assert scenario.tolerances == {}


def test_malformed_json_reports_position(verifier):
    with pytest.raises(ConfigParseError) as exc:
        parse_config('{\n  "schema_version": 1,\n  "kind": }', verifier)
    assert exc.value.errors[0].startswith("line 3 column")


def test_schema_errors_are_collected(verifier):
    with pytest.raises(ConfigParseError) as exc:
        parse_config(json.dumps({"schema_version": 2, "kind": "Nope", "extra": 1}), verifier)
    assert len(exc.value.errors) >= 3


def test_missing_family(verifier):
    with pytest.raises(ConfigParseError) as exc:
        parse_config(json.dumps({"schema_version": 1, "kind": "JacobiProbe"}), verifier)
    assert any("family is required for JacobiProbe" in e for e in exc.value.errors)


def test_parameter_violation_before_run(verifier):
    data = flow_run(family={"name": "H2xH2", "params": {"s": 0.5}})
    with pytest.raises(ParameterViolation) as exc:
        parse_config(json.dumps(data), verifier)
    assert "s must exceed 1" in exc.value.messages


def test_bump_violations(verifier):
    data = {
        "schema_version": 1,
        "kind": "BumpExperiment",
        "bump": {"p": [1.8, 0.0], "h": 1.0, "sigma": 0.5, "R": 2.0},
    }
    with pytest.raises(ParameterViolation) as exc:
        parse_config(json.dumps(data), verifier)
    assert "|p - O| must be below R - sigma" in exc.value.messages


def test_sweep_expands_in_order(verifier):
    data = {
        "schema_version": 1,
        "id": "radii",
        "kind": "Sweep",
        "child_kind": "FlowRun",
        "family": {"name": "S2xS1", "params": {"b": 1.0}},
        "sweep": {"b": [0.5, 1.0, 2.0]},
    }
    children = parse_config(json.dumps(data), verifier).expand()
    assert [c.id for c in children] == ["radii-000", "radii-001", "radii-002"]
    assert [c.family.params["b"] for c in children] == [0.5, 1.0, 2.0]
    assert all(c.kind == ScenarioKind.FLOW_RUN for c in children)


def test_sweep_over_bump_and_scenario_fields():
    scenario = Scenario.model_validate({
        "schema_version": 1,
        "kind": "Sweep",
        "child_kind": "BumpExperiment",
        "bump": {"p": [0.5, 0.0], "h": 1.0, "sigma": 0.5, "R": 2.0},
        "sweep": {"h": [0.5, 1.0], "vertices": [256, 512]},
    })
    children = scenario.expand()
    assert len(children) == 4
    assert {(c.bump.h, c.bump.vertices) for c in children} == {(0.5, 256), (0.5, 512), (1.0, 256), (1.0, 512)}


def test_sweep_violation_names_child(verifier):
    data = {
        "schema_version": 1,
        "id": "sw",
        "kind": "Sweep",
        "child_kind": "FlowRun",
        "family": {"name": "H2xH2", "params": {"s": 2.0}},
        "sweep": {"s": [2.0, 0.5]},
    }
    with pytest.raises(ParameterViolation) as exc:
        parse_config(json.dumps(data), verifier)
    assert "sw-001: s must exceed 1" in exc.value.messages
    assert not any(m.startswith("sw-000") for m in exc.value.messages)


def test_sweep_rules():
    with pytest.raises(ValueError):
        Scenario.model_validate({"schema_version": 1, "kind": "Sweep", "child_kind": "Sweep", "sweep": {"b": [1.0]}})
    with pytest.raises(ValueError):
        Scenario.model_validate(flow_run(sweep={"b": [1.0]}))


def test_result_summary_collects_child_failures():
    child = ScenarioResult(
        id="c", kind=ScenarioKind.FLOW_RUN,
        checks=[Check.compare("singular_time", 1e-3, 1e-6), Check(name="bound", status=CheckStatus.FLAGGED)],
    )
    parent = ScenarioResult(id="p", kind=ScenarioKind.SWEEP, children=[child], artifacts=["b.csv", "a.csv"])
    summary = parent.summary()
    assert summary["passed"] is False
    assert [f["name"] for f in summary["failures"]] == ["singular_time"]
    assert summary["artifacts"] == ["a.csv", "b.csv"]
    assert summary["children"][0]["checks"][1]["status"] == "flagged"
