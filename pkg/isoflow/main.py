import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from isoflow.models.ambient import AmbientSpec
from isoflow.models.catalog import Provenance
from isoflow.models.flow import TRAJECTORY_COLUMNS
from isoflow.models.scenario import Check, CheckStatus, Scenario, ScenarioKind, ScenarioResult
from isoflow.services.csf_service import SAMPLE_COLUMNS
from isoflow.services.verify_service import DEFAULT_CATALOG, DEFAULT_TOLERANCES, VerifyService
from isoflow.utils.config import Settings, get_settings
from isoflow.utils.errors import ConfigParseError, FocalPoint, IsoFlowError, ParameterViolation
from isoflow.utils.logging_setup import configure_logging
from isoflow.utils.output import write_csv, write_json
from isoflow.utils.validators import build_model, validation_messages

logger = logging.getLogger("isoflow.main")

PROBE_COLUMNS = ["r", "H_jacobi", "H_catalog", "normA2", "detD"]

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def parse_config(text: str, verifier: Optional[VerifyService] = None) -> Scenario:
    """Parse and validate a scenario document, reporting every error at once"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError([f"line {e.lineno} column {e.colno}: {e.msg}"])

    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        raise ConfigParseError(validation_messages(e))

    check_preconditions(scenario, verifier or VerifyService.create())
    return scenario


def check_preconditions(scenario: Scenario, verifier: VerifyService):
    """Build every referenced family so parameter violations surface before any run"""
    messages = []
    for child in scenario.expand():
        for ref in child.family_refs():
            try:
                verifier.catalog.build(ref.name, ref.params)
            except ParameterViolation as e:
                messages += [f"{child.id}: {m}" if child.id != scenario.id else m for m in e.messages]
        if child.bump is not None:
            try:
                build_model(AmbientSpec, child.bump.space())
            except ParameterViolation as e:
                messages += e.messages
    if messages:
        raise ParameterViolation(list(dict.fromkeys(messages)))


def _flow_run(scenario: Scenario, out_dir: Path, verifier: VerifyService, result: ScenarioResult):
    family = verifier.catalog.build(scenario.family.name, scenario.family.params)
    checks, traj, report = verifier.verify_family(
        family, scenario.route, t_max=scenario.t_max, tolerances=scenario.tolerances,
        sample_count=scenario.samples,
    )
    result.checks += checks
    if traj is not None:
        write_csv(out_dir / f"trajectory_{scenario.id}.csv", TRAJECTORY_COLUMNS, traj.rows())
        result.artifacts.append(f"trajectory_{scenario.id}.csv")
    write_json(out_dir / f"report_{scenario.id}.json", {
        "family": family.record(),
        "route": scenario.route.value,
        "status": traj.status.value if traj is not None else None,
        "t_end": traj.t_end if traj is not None else None,
        "singularity": report.model_dump(mode="json") if report is not None else None,
        "checks": [c.model_dump(mode="json") for c in checks],
    })
    result.artifacts.append(f"report_{scenario.id}.json")


def _jacobi_probe(scenario: Scenario, out_dir: Path, verifier: VerifyService, result: ScenarioResult):
    family = verifier.catalog.build(scenario.family.name, scenario.family.params)
    if scenario.r_max is not None:
        sign = -1.0 if family.H0 < 0 else 1.0
        r_end = sign * scenario.r_max
    else:
        r_end = verifier.probe_range(family, 0.9)
    rs = np.linspace(0.0, r_end, scenario.r_steps)

    try:
        samples = verifier.geometry_samples(family, rs)
    except FocalPoint as e:
        logger.error(f"{scenario.id}: {e}")
        raise
    if samples is None:
        raise ParameterViolation([f"{family.family} has no Jacobi data"], family=family.family)

    rows = [[g.r, g.H, family.H_of_r(g.r), g.normA2, g.detD] for g in samples]
    write_csv(out_dir / f"probe_{scenario.id}.csv", PROBE_COLUMNS, rows)
    result.artifacts.append(f"probe_{scenario.id}.csv")

    tol = verifier.tolerances(scenario.tolerances)
    result.checks.append(verifier.check_jacobi(family, tol=tol["jacobi"]))
    result.checks.append(verifier.check_riccati(family, tol=tol["riccati"]))
    write_json(out_dir / f"report_{scenario.id}.json", {
        "family": family.record(),
        "r_end": r_end,
        "checks": [c.model_dump(mode="json") for c in result.checks],
    })
    result.artifacts.append(f"report_{scenario.id}.json")


def _catalog_verify(scenario: Scenario, out_dir: Path, verifier: VerifyService, result: ScenarioResult):
    refs = [(ref.name, ref.params) for ref in scenario.family_refs()] or DEFAULT_CATALOG
    table = []
    for name, params in refs:
        family = verifier.catalog.build(name, params)
        checks, traj, report = verifier.verify_family(family, tolerances=scenario.tolerances)
        result.checks += checks
        table.append({
            "family": family.record(),
            "T": report.T if report is not None else None,
            "type": report.type.value if report is not None else None,
            "Lambda": report.Lambda if report is not None else None,
            "passed": not any(c.failed for c in checks),
            "checks": [c.model_dump(mode="json") for c in checks],
        })
    result.details["families"] = len(table)
    write_json(out_dir / f"report_{scenario.id}.json", {"families": table})
    result.artifacts.append(f"report_{scenario.id}.json")


def _bump_experiment(scenario: Scenario, out_dir: Path, verifier: VerifyService, result: ScenarioResult):
    bump = scenario.bump
    report = verifier.csf.run_bump_experiment(
        bump.p, bump.h, bump.sigma, bump.R, O=bump.O, vertices=bump.vertices, dt=bump.dt, floor=bump.floor,
    )
    write_csv(out_dir / f"bump_{scenario.id}.csv", SAMPLE_COLUMNS, verifier.csf.sample_rows(report))
    result.artifacts.append(f"bump_{scenario.id}.csv")

    result.checks.append(Check(
        name="monotone_area_length",
        status=CheckStatus.PASSED if report.area_monotone and report.length_monotone else CheckStatus.FAILED,
        provenance=Provenance.TRIVIAL,
    ))
    if report.t_star_found:
        result.checks.append(Check(
            name="t_star_before_extinction",
            status=CheckStatus.PASSED if report.before_extinction else CheckStatus.FAILED,
            value=report.t_star,
            tolerance=report.extinction_estimate,
            provenance=Provenance.DERIVED,
        ))
    elif bump.h != 0:
        result.checks.append(Check(
            name="t_star_found", status=CheckStatus.FLAGGED, provenance=Provenance.DERIVED, note="no t* found",
        ))

    result.details.update(report.summary())
    write_json(out_dir / f"report_{scenario.id}.json", report.summary())
    result.artifacts.append(f"report_{scenario.id}.json")


RUNNERS = {
    ScenarioKind.FLOW_RUN: _flow_run,
    ScenarioKind.JACOBI_PROBE: _jacobi_probe,
    ScenarioKind.CATALOG_VERIFY: _catalog_verify,
    ScenarioKind.BUMP_EXPERIMENT: _bump_experiment,
}


def run_scenario(
    scenario: Scenario,
    out_dir: Path,
    settings: Optional[Settings] = None,
    verifier: Optional[VerifyService] = None,
    write_summary: bool = True,
) -> ScenarioResult:
    """Run one scenario and write its artifacts into out_dir"""
    settings = settings or get_settings()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info(f"Running scenario {scenario.id} ({scenario.kind.value})")

    if scenario.kind == ScenarioKind.SWEEP:
        from isoflow.worker import run_sweep

        children = run_sweep(scenario.expand(), out_dir, settings, settings.workers)
        result = ScenarioResult(id=scenario.id, kind=scenario.kind, children=children)
    else:
        verifier = verifier or VerifyService.create(settings)
        result = ScenarioResult(id=scenario.id, kind=scenario.kind)
        RUNNERS[scenario.kind](scenario, out_dir, verifier, result)

    if write_summary:
        write_json(out_dir / "summary.json", result.summary())
    logger.info(f"Scenario {scenario.id} {'passed' if result.passed else 'failed'}")
    return result


def split_overrides(pairs: Sequence[str]) -> Dict[str, Dict[str, str]]:
    """Route KEY=VAL pairs to settings fields or verification tolerances"""
    settings, tolerances, errors = {}, {}, []
    for pair in pairs:
        key, sep, value = pair.partition("=")
        key = key.strip()
        if not sep or not key:
            errors.append(f"--tol-override expects KEY=VAL, got '{pair}'")
        elif key in DEFAULT_TOLERANCES:
            try:
                tolerances[key] = float(value)
            except ValueError:
                errors.append(f"tolerance {key} must be a number, got '{value}'")
        else:
            settings[key] = value
    if errors:
        raise ConfigParseError(errors)
    return {"settings": settings, "tolerances": tolerances}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isoflow",
        description="Mean curvature flow of isoparametric hypersurfaces by parallels",
    )
    parser.add_argument("--config", type=Path, help="scenario file (JSON, schema_version 1)")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--selftest", action="store_true", help="run the acceptance self-test")
    parser.add_argument("--seed", type=int, default=None, help="seed for the self-test's randomized checks")
    parser.add_argument(
        "--tol-override", action="append", default=[], metavar="KEY=VAL",
        help="override a tolerance (repeatable)",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    return parser


def _fail(out_dir: Path, code: int, errors: List[str]) -> int:
    """Report errors on stderr and, when possible, in summary.json"""
    print(json.dumps({"errors": errors}, indent=2), file=sys.stderr)
    try:
        write_json(out_dir / "summary.json", {"passed": False, "exit_code": code, "errors": errors})
    except OSError:
        pass
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        base = get_settings()
        overrides = split_overrides(args.tol_override)
        settings = base.with_overrides(overrides["settings"])
    except ConfigParseError as e:
        configure_logging(args.log_level or "INFO")
        return _fail(args.out, EXIT_CONFIG, e.errors)
    configure_logging(args.log_level or settings.log_level)

    verifier = VerifyService.create(settings)

    if args.selftest:
        try:
            result = verifier.selftest(seed=args.seed or 0)
            write_json(args.out / "selftest.json", result.summary())
        except OSError as e:
            logger.error(f"Could not write selftest results: {e}")
            return _fail(args.out, EXIT_RUNTIME, [f"{e.filename}: {e.strerror}"])
        return EXIT_OK if result.passed else EXIT_VERIFICATION

    if args.config is None:
        return _fail(args.out, EXIT_CONFIG, ["either --config or --selftest is required"])

    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"Could not read {args.config}: {e}")
        return _fail(args.out, EXIT_RUNTIME, [f"{args.config}: {e.strerror}"])

    try:
        scenario = parse_config(text, verifier)
    except ConfigParseError as e:
        return _fail(args.out, EXIT_CONFIG, e.errors)
    except ParameterViolation as e:
        return _fail(args.out, EXIT_CONFIG, e.messages)

    if overrides["tolerances"]:
        scenario = scenario.model_copy(update={"tolerances": {**scenario.tolerances, **overrides["tolerances"]}})
    if args.seed is not None:
        logger.warning(f"--seed {args.seed} is ignored: scenario runs draw no random numbers, only --selftest does")

    try:
        result = run_scenario(scenario, args.out, settings, verifier)
    except OSError as e:
        logger.error(f"IO error: {e}")
        return _fail(args.out, EXIT_RUNTIME, [f"{e.filename}: {e.strerror}"])
    except IsoFlowError as e:
        logger.error(f"Scenario {scenario.id} failed: {type(e).__name__}: {e}")
        return _fail(args.out, EXIT_RUNTIME, [f"{type(e).__name__}: {e}"])

    if not result.passed:
        failures = [f"{c.family or scenario.id}: {c.name}" for c in result.failures] + result.all_errors
        print(json.dumps({"failures": failures}, indent=2), file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
