from typing import Any, Dict, List, Optional, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from isoflow.utils.errors import ParameterViolation

M = TypeVar("M", bound=BaseModel)

VALUE_ERROR_PREFIX = "Value error, "


def validation_messages(error: ValidationError) -> List[str]:
    """Flatten a pydantic ValidationError into one message per violation"""
    messages = []
    for err in error.errors():
        msg = err["msg"]
        if msg.startswith(VALUE_ERROR_PREFIX):
            msg = msg[len(VALUE_ERROR_PREFIX):]
        loc = ".".join(str(part) for part in err["loc"])
        # Model validators join every violation with "; "
        for part in msg.split("; "):
            messages.append(f"{loc}: {part}" if loc else part)
    return messages


def build_model(model_cls: Type[M], data: Dict[str, Any], family: Optional[str] = None) -> M:
    """Validate data into model_cls, raising ParameterViolation with every message"""
    try:
        return model_cls.model_validate(data)
    except ValidationError as e:
        raise ParameterViolation(validation_messages(e), family=family or data.get("family"))


def as_square_matrix(value: Any, name: str = "matrix") -> np.ndarray:
    matrix = np.array(value, dtype=float)
    if matrix.ndim == 0:
        matrix = matrix.reshape(1, 1)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{name} has non-finite entries")
    return matrix


def require_symmetric(matrix: np.ndarray, tol: float = 1e-12, name: str = "matrix") -> np.ndarray:
    """Check symmetry relative to the matrix scale"""
    scale = max(1.0, float(np.max(np.abs(matrix))))
    asym = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
    if asym > tol * scale:
        raise ValueError(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    return matrix
