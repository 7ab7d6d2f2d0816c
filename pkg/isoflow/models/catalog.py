from enum import Enum
from typing import Any, Callable, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from isoflow.models.ambient import AmbientSpec, NormalFrameContext, ProductCurvatureModel
from isoflow.models.jacobi import JacobiState, ShapeOperator


class Provenance(str, Enum):
    PAPER = "PAPER"        # formula printed in the source derivation
    TRIVIAL = "TRIVIAL"    # immediate from the definitions
    DERIVED = "DERIVED"    # derived here and checked numerically


class AnalyticKind(str, Enum):
    EXPLICIT = "Explicit"
    IMPLICIT = "Implicit"
    NONE = "None"


class TangentClass(str, Enum):
    W_W = "(w,w)"
    W_MINUS_W = "(w,-w)"
    COMPLEMENT = "complement"


class PairModel(str, Enum):
    SPHERE = "sphere"      # S^2 x S^2 in R^3 x R^3
    LORENTZ = "lorentz"    # H^2 x H^2 in L^3 x L^3


class FamilySolution(BaseModel):
    """Closed-form isoparametric family.

    Distances r and displacements epsilon use the family's own normal, so
    focal_r is negative when the flow moves against N.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    family: str
    params: Dict[str, float]
    n: int
    space: AmbientSpec
    context: NormalFrameContext
    shape_operator: ShapeOperator

    H_of_r: Callable[[float], float]
    eigenvalues_of_r: Callable[[float], np.ndarray]

    analytic: AnalyticKind = AnalyticKind.NONE
    epsilon_of_t: Optional[Callable[[float], float]] = None
    implicit_relation: Optional[Callable[[float, float], float]] = None

    focal_r: Optional[float] = None
    singular_time: Optional[float] = None

    # Exactly one Jacobi route is set: a constant curvature model or a closed form D
    curvature_model: Optional[ProductCurvatureModel] = None
    closed_form_D: Optional[Callable[[float], JacobiState]] = None
    rotation: Optional[np.ndarray] = None
    # nabla A = 0 on every parallel
    parallel_A: bool = False

    formulas: Dict[str, str] = Field(default_factory=dict)
    provenance: Dict[str, Provenance] = Field(default_factory=dict)
    notes: Dict[str, Any] = Field(default_factory=dict)

    @property
    def H0(self) -> float:
        return self.shape_operator.mean_curvature

    @property
    def R_bar(self) -> Optional[np.ndarray]:
        if self.curvature_model is None:
            return None
        return self.curvature_model.normal_operator()

    @property
    def ricci_normal(self) -> float:
        if self.curvature_model is not None:
            return self.curvature_model.ricci_normal()
        return float(self.notes.get("ricci_normal", 0.0))

    @property
    def family_id(self) -> str:
        values = ",".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        return f"{self.family}({values})"

    def record(self) -> dict:
        """Self-describing record of the family and the formulas it uses"""
        return {
            "family": self.family,
            "params": dict(self.params),
            "n": self.n,
            "analytic": self.analytic.value,
            "H0": self.H0,
            "focal_r": self.focal_r,
            "singular_time": self.singular_time,
            "formulas": dict(self.formulas),
            "provenance": {k: v.value for k, v in self.provenance.items()},
            "notes": {k: v for k, v in self.notes.items() if not callable(v)},
        }
