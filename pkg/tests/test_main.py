import json

import pytest

from isoflow.main import EXIT_CONFIG, EXIT_OK, PROBE_COLUMNS, main, parse_config, run_scenario, split_overrides
from isoflow.models.flow import TRAJECTORY_COLUMNS
from isoflow.utils.config import Settings
from isoflow.utils.errors import ConfigParseError
from isoflow.utils.output import read_csv

S2S1_RUN = {
    "schema_version": 1,
    "id": "cyl",
    "kind": "FlowRun",
    "family": {"name": "S2xS1", "params": {"b": 1.0}},
}


def write_config(tmp_path, data) -> str:
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data) if isinstance(data, dict) else data, encoding="utf-8")
    return str(path)


def test_flow_run_writes_trajectory(tmp_path, settings, verifier):
    scenario = parse_config(json.dumps(S2S1_RUN), verifier)
    result = run_scenario(scenario, tmp_path, settings, verifier)
    assert result.passed
    assert set(result.artifacts) == {"trajectory_cyl.csv", "report_cyl.json"}

    rows = read_csv(tmp_path / "trajectory_cyl.csv")
    assert list(rows[0]) == TRAJECTORY_COLUMNS
    for row in rows:
        if row["t"] <= 1.4:
            assert row["epsilon"] == pytest.approx((1.0 - 2.0 * row["t"] / 3.0) ** 0.5 - 1.0, abs=1e-7)

    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["passed"] is True


def test_jacobi_probe(tmp_path, settings, verifier):
    scenario = parse_config(json.dumps({
        "schema_version": 1, "id": "probe", "kind": "JacobiProbe",
        "family": {"name": "S2xS2", "params": {"s": 0.5}}, "r_steps": 20,
    }), verifier)
    result = run_scenario(scenario, tmp_path, settings, verifier)
    rows = read_csv(tmp_path / "probe_probe.csv")
    assert list(rows[0]) == PROBE_COLUMNS
    assert len(rows) == 20
    for row in rows:
        assert row["H_jacobi"] == pytest.approx(row["H_catalog"], rel=1e-7)
    assert {c.name for c in result.checks} == {"jacobi_vs_catalog", "riccati"}


def test_flat_bump_run_reports_no_t_star(tmp_path, settings, verifier):
    scenario = parse_config(json.dumps({
        "schema_version": 1, "id": "flat", "kind": "BumpExperiment",
        "bump": {"p": [0.0, 0.0], "h": 0.0, "sigma": 0.5, "R": 1.0, "vertices": 64, "floor": 0.0},
    }), verifier)
    result = run_scenario(scenario, tmp_path, settings, verifier)
    assert "no t* found" in result.details["notes"]
    assert result.passed
    assert (tmp_path / "bump_flat.csv").exists()
    assert all(c.provenance is not None for c in result.checks)


def test_bump_run_tags_every_check(tmp_path, settings, verifier):
    scenario = parse_config(json.dumps({
        "schema_version": 1, "id": "coarse", "kind": "BumpExperiment",
        "bump": {"p": [0.5, 0.0], "h": 1.0, "sigma": 0.5, "R": 2.0, "vertices": 64},
    }), verifier)
    result = run_scenario(scenario, tmp_path, settings, verifier)
    names = {c.name for c in result.checks}
    assert names == {"monotone_area_length", "t_star_before_extinction"}
    assert all(c.provenance is not None for c in result.checks)


def test_sweep_runs_every_child(tmp_path, verifier):
    scenario = parse_config(json.dumps({
        "schema_version": 1, "id": "radii", "kind": "Sweep", "child_kind": "FlowRun",
        "family": {"name": "S2xS1", "params": {"b": 1.0}}, "sweep": {"b": [0.5, 2.0]},
    }), verifier)
    result = run_scenario(scenario, tmp_path, Settings(workers=1))
    assert [child.id for child in result.children] == ["radii-000", "radii-001"]
    assert (tmp_path / "trajectory_radii-001.csv").exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert len(summary["children"]) == 2


def test_split_overrides():
    routed = split_overrides(["rtol=1e-9", "jacobi=1e-6"])
    assert routed == {"settings": {"rtol": "1e-9"}, "tolerances": {"jacobi": 1e-6}}
    with pytest.raises(ConfigParseError):
        split_overrides(["jacobi"])
    with pytest.raises(ConfigParseError):
        split_overrides(["jacobi=tight"])


def test_settings_overrides_reject_unknown_keys():
    assert Settings().with_overrides({"RTOL": "1e-9"}).rtol == pytest.approx(1e-9)
    with pytest.raises(ConfigParseError) as exc:
        Settings().with_overrides({"bogus": "1"})
    assert exc.value.errors == ["unknown tolerance key 'bogus'"]


def test_main_bad_json_exits_with_config_error(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["--config", write_config(tmp_path, "{not json"), "--out", str(out)])
    assert code == EXIT_CONFIG
    assert "line 1 column" in capsys.readouterr().err
    assert json.loads((out / "summary.json").read_text())["passed"] is False


def test_main_parameter_violation(tmp_path):
    data = dict(S2S1_RUN, family={"name": "H2xH2", "params": {"s": 0.5}})
    assert main(["--config", write_config(tmp_path, data), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_main_unknown_override(tmp_path):
    code = main(["--config", write_config(tmp_path, S2S1_RUN), "--out", str(tmp_path), "--tol-override", "bogus=1"])
    assert code == EXIT_CONFIG


def test_main_requires_config_or_selftest(tmp_path):
    assert main(["--out", str(tmp_path)]) == EXIT_CONFIG


def test_main_runs_scenario(tmp_path):
    out = tmp_path / "out"
    code = main(["--config", write_config(tmp_path, S2S1_RUN), "--out", str(out), "--tol-override", "singular_time=1e-5"])
    assert code == EXIT_OK
    assert (out / "trajectory_cyl.csv").exists()


def test_main_accepts_seed_for_scenarios(tmp_path):
    out = tmp_path / "out"
    code = main(["--config", write_config(tmp_path, S2S1_RUN), "--out", str(out), "--seed", "7"])
    assert code == EXIT_OK


def test_scenario_files_carry_no_seed(tmp_path):
    data = dict(S2S1_RUN, seed=3)
    assert main(["--config", write_config(tmp_path, data), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


@pytest.mark.slow
def test_selftest(tmp_path):
    assert main(["--selftest", "--seed", "0", "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "selftest.json").read_text())["passed"] is True
