import csv
import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel

logger = logging.getLogger("isoflow.output")


class IsoFlowJSONEncoder(json.JSONEncoder):
    """JSON encoder for numpy values, pydantic models and enums"""

    def default(self, obj):
        if isinstance(obj, BaseModel):
            return obj.model_dump(mode="python")
        elif isinstance(obj, Enum):
            return obj.value
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, Path):
            return str(obj)
        return super().default(obj)


def _clean(value: Any) -> Any:
    # JSON has no inf/nan; write them as strings so the files stay parseable
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, BaseModel):
        return _clean(value.model_dump(mode="python"))
    if isinstance(value, Enum):
        return value.value
    return value


def format_number(value: Any) -> str:
    """Format a CSV cell; floats use repr so files are bit-reproducible"""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def dumps_json(data: Any) -> str:
    return json.dumps(_clean(data), cls=IsoFlowJSONEncoder, indent=2, sort_keys=True) + "\n"


def write_json(path: Path, data: Any) -> Path:
    """Write a JSON document"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps_json(data), encoding="utf-8")
    except OSError as e:
        logger.error(f"Error writing {path}: {e}")
        raise
    logger.debug(f"Wrote {path}")
    return path


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write rows under a fixed header"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(columns))
            count = 0
            for row in rows:
                writer.writerow([format_number(v) for v in row])
                count += 1
    except OSError as e:
        logger.error(f"Error writing {path}: {e}")
        raise
    logger.debug(f"Wrote {count} rows to {path}")
    return path


def read_csv(path: Path) -> List[dict]:
    """Read a CSV written by write_csv back as a list of float dicts"""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
