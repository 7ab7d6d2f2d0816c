import os
import logging
from enum import Enum
from typing import Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from isoflow.utils.errors import ConfigParseError

logger = logging.getLogger("isoflow.config")

# Pick up a local .env if present; real environment variables win
load_dotenv(override=False)


class CurvatureNorm(str, Enum):
    OPERATOR = "operator"
    FROBENIUS = "frobenius"


class Settings(BaseModel):
    """Numeric tolerances and runtime knobs shared by all services"""

    model_config = ConfigDict(frozen=True, use_enum_values=False)

    rtol: float = Field(1e-11, gt=0)
    atol: float = Field(1e-12, gt=0)
    blowup_h: float = Field(1e8, gt=0)
    focal_threshold: float = Field(1e-12, gt=0)
    focal_bisect_tol: float = Field(1e-10, gt=0)
    focal_window_steps: int = Field(1024, ge=16)
    stop_gap: float = Field(1e-3, gt=0)  # relative gap to the focal radius where the flow run stops
    curvature_norm: CurvatureNorm = CurvatureNorm.OPERATOR
    lambda_window: float = Field(1e-2, gt=0, lt=1)
    lambda_samples: int = Field(64, ge=8)
    lambda_min_samples: int = Field(32, ge=3)
    lambda_spread: float = Field(0.05, gt=0)
    bound_slack: float = Field(2.0, ge=1)
    workers: int = Field(4, ge=1)
    log_level: str = "INFO"

    def with_overrides(self, overrides: Dict[str, str]) -> "Settings":
        """Return a copy with KEY=VAL overrides applied (keys are field names)"""
        data = self.model_dump()
        errors = []
        for key, value in overrides.items():
            name = key.strip().lower()
            if name not in data:
                errors.append(f"unknown tolerance key '{key}'")
                continue
            data[name] = value
        if errors:
            raise ConfigParseError(errors)
        try:
            return Settings(**data)
        except ValidationError as e:
            raise ConfigParseError(
                [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
            )


# Environment variable -> Settings field
ENV_KEYS = {
    "ISOFLOW_RTOL": "rtol",
    "ISOFLOW_ATOL": "atol",
    "ISOFLOW_BLOWUP_H": "blowup_h",
    "ISOFLOW_FOCAL_THRESHOLD": "focal_threshold",
    "ISOFLOW_CURVATURE_NORM": "curvature_norm",
    "ISOFLOW_LAMBDA_SPREAD": "lambda_spread",
    "ISOFLOW_BOUND_SLACK": "bound_slack",
    "ISOFLOW_WORKERS": "workers",
    "ISOFLOW_LOG_LEVEL": "log_level",
}

_settings: Optional[Settings] = None


def load_settings() -> Settings:
    """Build settings from the environment"""
    values = {}
    for env_key, field in ENV_KEYS.items():
        raw = os.getenv(env_key)
        if raw is not None:
            values[field] = raw
    try:
        return Settings(**values)
    except ValidationError as e:
        raise ConfigParseError(
            [f"{err['loc'][0]}: {err['msg']}" for err in e.errors()]
        )


def get_settings() -> Settings:
    """Get or create the process-wide settings instance"""
    global _settings

    if _settings is None:
        _settings = load_settings()
        logger.debug(f"Settings loaded: {_settings.model_dump()}")

    return _settings
