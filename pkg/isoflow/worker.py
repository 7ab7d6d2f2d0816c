import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import List, Optional

from isoflow.models.scenario import Scenario, ScenarioResult
from isoflow.utils.config import Settings, get_settings
from isoflow.utils.errors import IsoFlowError

logger = logging.getLogger("isoflow.worker")


def _run_child(scenario_data: dict, out_dir: str, settings_data: dict) -> dict:
    """Run one sweep child in a worker process; results travel back as JSON data"""
    from isoflow.main import run_scenario

    scenario = Scenario.model_validate(scenario_data)
    settings = Settings.model_validate(settings_data)
    try:
        result = run_scenario(scenario, Path(out_dir), settings, write_summary=False)
    except IsoFlowError as e:
        logger.error(f"Child {scenario.id} failed: {type(e).__name__}: {e}")
        result = ScenarioResult(id=scenario.id, kind=scenario.kind, errors=[f"{type(e).__name__}: {e}"])
    return result.model_dump(mode="json")


def run_sweep(
    children: List[Scenario],
    out_dir: Path,
    settings: Optional[Settings] = None,
    workers: Optional[int] = None,
) -> List[ScenarioResult]:
    """Run independent child scenarios on a process pool, results sorted by id"""
    settings = settings or get_settings()
    workers = min(workers or settings.workers, len(children)) or 1
    settings_data = settings.model_dump(mode="json")
    logger.info(f"Running {len(children)} sweep children on {workers} worker(s)")

    payloads = [(child.model_dump(mode="json"), str(out_dir), settings_data) for child in children]
    if workers == 1:
        raw = [_run_child(*payload) for payload in payloads]
    else:
        raw = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_child, *payload): payload[0]["id"] for payload in payloads}
            for future in as_completed(futures):
                child_id = futures[future]
                try:
                    raw.append(future.result())
                except Exception as e:
                    logger.error(f"Worker crashed on {child_id}: {e}")
                    kind = next(c.kind for c in children if c.id == child_id)
                    raw.append(ScenarioResult(id=child_id, kind=kind, errors=[f"worker error: {e}"]).model_dump(mode="json"))
                else:
                    logger.debug(f"Child {child_id} finished")

    results = [ScenarioResult.model_validate(data) for data in raw]
    return sorted(results, key=lambda r: r.id)
