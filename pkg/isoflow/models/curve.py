from typing import Any, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# exp(-700) is the last value above the double underflow range
EXPONENT_LIMIT = 700.0

MIN_VERTICES = 16


class BumpMetric(BaseModel):
    """Metric on R^2 induced by the graph of h exp(-sigma^2/(sigma^2 - |x - p|^2)).

    All methods take points of shape (..., 2) and broadcast.
    """

    model_config = ConfigDict(frozen=True)

    p: Tuple[float, float] = (0.0, 0.0)
    h: float = 0.0
    sigma: float = Field(1.0, gt=0)

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.p, dtype=float)

    @property
    def is_flat(self) -> bool:
        return self.h == 0.0

    def _local(self, x: Any):
        x = np.asarray(x, dtype=float)
        d = x - self.center
        q = np.einsum("...i,...i->...", d, d)
        u = self.sigma ** 2 - q
        inside = u > 0
        safe_u = np.where(inside, u, 1.0)
        expo = self.sigma ** 2 / safe_u
        inside &= expo < EXPONENT_LIMIT
        f = np.where(inside, self.h * np.exp(-np.minimum(expo, EXPONENT_LIMIT)), 0.0)
        return d, safe_u, inside, f

    def height(self, x: Any) -> np.ndarray:
        _, _, _, f = self._local(x)
        return f

    def radial_slope_quotient(self, rho: Any) -> np.ndarray:
        """f_rho / rho, finite at the center"""
        rho = np.asarray(rho, dtype=float)
        u = self.sigma ** 2 - rho ** 2
        inside = (u > 0) & (self.sigma ** 2 / np.where(u > 0, u, 1.0) < EXPONENT_LIMIT)
        safe_u = np.where(inside, u, 1.0)
        f = np.where(inside, self.h * np.exp(-self.sigma ** 2 / safe_u), 0.0)
        return np.where(inside, -2.0 * self.sigma ** 2 * f / safe_u ** 2, 0.0)

    def radial_slope(self, rho: Any) -> np.ndarray:
        """df/drho of the profile as a function of the distance to p"""
        rho = np.asarray(rho, dtype=float)
        return rho * self.radial_slope_quotient(rho)

    def radial_stretch(self, rho: Any) -> np.ndarray:
        """sqrt(1 + f_rho^2), the metric length of a unit radial chart step"""
        return np.sqrt(1.0 + self.radial_slope(rho) ** 2)

    def gradient(self, x: Any) -> np.ndarray:
        d, u, inside, f = self._local(x)
        coeff = np.where(inside, -2.0 * self.sigma ** 2 * f / u ** 2, 0.0)
        return coeff[..., None] * d

    def hessian(self, x: Any) -> np.ndarray:
        d, u, inside, f = self._local(x)
        s2 = self.sigma ** 2
        dd = d[..., :, None] * d[..., None, :]
        eye = np.eye(2)
        inner = (
            eye / (u ** 2)[..., None, None]
            - 2.0 * s2 * dd / (u ** 4)[..., None, None]
            + 4.0 * dd / (u ** 3)[..., None, None]
        )
        hess = -2.0 * s2 * f[..., None, None] * inner
        return np.where(inside[..., None, None], hess, 0.0)

    def metric(self, x: Any) -> np.ndarray:
        """g_ij = delta_ij + f_i f_j"""
        grad = self.gradient(x)
        return np.eye(2) + grad[..., :, None] * grad[..., None, :]

    def christoffel(self, x: Any) -> np.ndarray:
        """Gamma^k_ij indexed [..., k, i, j]"""
        grad = self.gradient(x)
        hess = self.hessian(x)
        w = 1.0 + np.einsum("...i,...i->...", grad, grad)
        return grad[..., :, None, None] * hess[..., None, :, :] / w[..., None, None, None]

    def area_density(self, x: Any) -> np.ndarray:
        grad = self.gradient(x)
        return np.sqrt(1.0 + np.einsum("...i,...i->...", grad, grad))

    def gaussian_curvature(self, x: Any) -> np.ndarray:
        grad = self.gradient(x)
        hess = self.hessian(x)
        w = 1.0 + np.einsum("...i,...i->...", grad, grad)
        det = hess[..., 0, 0] * hess[..., 1, 1] - hess[..., 0, 1] * hess[..., 1, 0]
        return det / w ** 2

    def embed(self, x: Any) -> np.ndarray:
        """Lift chart points to the graph in R^3"""
        x = np.asarray(x, dtype=float)
        return np.concatenate([x, self.height(x)[..., None]], axis=-1)


class DiscreteCurve(BaseModel):
    """Closed polygon in the chart, vertices in counter-clockwise order"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vertices: np.ndarray

    @field_validator("vertices", mode="before")
    @classmethod
    def coerce_vertices(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"vertices must have shape (m, 2), got {arr.shape}")
        if arr.shape[0] < MIN_VERTICES:
            raise ValueError(f"a curve needs at least {MIN_VERTICES} vertices")
        if not np.all(np.isfinite(arr)):
            raise ValueError("vertices must be finite")
        return arr

    @property
    def size(self) -> int:
        return self.vertices.shape[0]

    @property
    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def chart_spacing(self) -> np.ndarray:
        return np.linalg.norm(self.edges, axis=1)

    def signed_area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @classmethod
    def circle(cls, center: Tuple[float, float], radius: float, m: int) -> "DiscreteCurve":
        theta = 2.0 * np.pi * np.arange(m) / m
        pts = np.column_stack([center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)])
        return cls(vertices=pts)


class CsfSettings(BaseModel):
    """Discretisation knobs of the curve shortening solver"""

    vertices: int = Field(1024, ge=MIN_VERTICES)
    dt: Optional[float] = Field(None, gt=0)  # defaults to (initial chart spacing)^2
    max_spacing_ratio: float = Field(2.0, gt=1)
    h_min: float = Field(2e-3, gt=0)
    embedding_check_every: int = Field(50, ge=1)
    max_attempts: int = Field(6, ge=1)
    sample_every: int = Field(10, ge=1)
    # samples between deviation evaluations once the threshold was crossed
    dev_every: int = Field(10, ge=1)
    max_steps: int = Field(200000, ge=1)
    stop_area_fraction: float = Field(0.02, gt=0, lt=1)


class ExperimentSample(BaseModel):
    t: float
    length: float
    area: float
    dev: float
    min_dist_to_bump: float


class ExperimentReport(BaseModel):
    """Summary of one bump experiment"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    p: Tuple[float, float]
    h: float
    sigma: float
    R: float
    O: Tuple[float, float]
    vertices: int
    dt: float
    floor: float
    threshold: float
    t_star: Optional[float] = None
    extinction_estimate: Optional[float] = None
    t_end: float = 0.0
    samples: List[ExperimentSample] = Field(default_factory=list)
    area_monotone: bool = True
    length_monotone: bool = True
    notes: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_order(self) -> "ExperimentReport":
        if self.t_star is not None and self.extinction_estimate is not None:
            if self.t_star >= self.extinction_estimate:
                self.notes.append("t* is not before the extinction estimate")
        return self

    @property
    def t_star_found(self) -> bool:
        return self.t_star is not None

    @property
    def before_extinction(self) -> bool:
        return (
            self.t_star is not None
            and self.extinction_estimate is not None
            and self.t_star < self.extinction_estimate
        )

    def summary(self) -> dict:
        return {
            "p": list(self.p),
            "h": self.h,
            "sigma": self.sigma,
            "R": self.R,
            "O": list(self.O),
            "vertices": self.vertices,
            "dt": self.dt,
            "floor": self.floor,
            "threshold": self.threshold,
            "t_star": self.t_star,
            "t_star_found": self.t_star_found,
            "extinction_estimate": self.extinction_estimate,
            "before_extinction": self.before_extinction,
            "t_end": self.t_end,
            "area_monotone": self.area_monotone,
            "length_monotone": self.length_monotone,
            "notes": self.notes,
        }
