from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from isoflow.utils.config import CurvatureNorm
from isoflow.utils.validators import as_square_matrix, require_symmetric


class AmbientFamily(str, Enum):
    SPACE_FORM = "SpaceForm"
    EKTAU = "EkTau"
    S2XR2 = "S2xR2"
    S2XS2 = "S2xS2"
    H2XH2 = "H2xH2"
    BUMP_PRODUCT = "BumpProduct"


class S2R2Case(str, Enum):
    SLICE = "Slice"        # S^2 x R, totally geodesic
    S2XS1 = "S2xS1"        # S^2 x S^1(b)
    S1XR2 = "S1xR2"        # S^1(a) x R^2


# Hypersurface dimension of the fixed-dimension families
FAMILY_DIMENSION = {
    AmbientFamily.EKTAU: 2,
    AmbientFamily.S2XR2: 3,
    AmbientFamily.S2XS2: 3,
    AmbientFamily.H2XH2: 3,
    AmbientFamily.BUMP_PRODUCT: 1,
}


class AmbientSpec(BaseModel):
    """Tagged ambient space family with its parameters.

    Only the parameters of the selected family are read. n is the dimension of
    the hypersurface, so the ambient space has dimension n + 1.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: AmbientFamily
    n: Optional[int] = Field(None, ge=1)

    # SpaceForm
    c: Optional[float] = None

    # EkTau
    kappa: Optional[float] = None
    tau: Optional[float] = None

    # S2xR2
    case: Optional[S2R2Case] = None
    b: Optional[float] = None
    a: Optional[float] = None
    phi_a: Optional[float] = None

    # S2xS2 / H2xH2
    s: Optional[float] = None

    # BumpProduct
    p: Optional[Tuple[float, float]] = None
    h: Optional[float] = None
    sigma: Optional[float] = None
    R: Optional[float] = None
    O: Optional[Tuple[float, float]] = None

    @model_validator(mode="before")
    @classmethod
    def fill_dimension(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("n") is None:
            try:
                family = AmbientFamily(data.get("family"))
            except ValueError:
                return data
            data = dict(data)
            data["n"] = FAMILY_DIMENSION.get(family, 2)
        return data

    @model_validator(mode="after")
    def check_family(self) -> "AmbientSpec":
        errors = family_violations(self)
        if errors:
            raise ValueError("; ".join(errors))
        return self

    @property
    def ambient_dimension(self) -> int:
        return self.n + 1

    def colatitude(self) -> float:
        """phi_a of the S^1(a) x R^2 case; a alone selects the branch below pi/2"""
        if self.phi_a is not None:
            return float(self.phi_a)
        return float(np.arcsin(self.a))

    def params(self) -> Dict[str, Any]:
        return self.model_dump(exclude_none=True, mode="json")


def family_violations(spec: AmbientSpec) -> List[str]:
    """Collect every precondition violated by spec"""
    errors = []
    family = spec.family

    fixed = FAMILY_DIMENSION.get(family)
    if fixed is not None and spec.n != fixed:
        errors.append(f"n must be {fixed} for {family.value}")

    if family == AmbientFamily.SPACE_FORM:
        if spec.c is None:
            errors.append("c is required")

    elif family == AmbientFamily.EKTAU:
        if spec.kappa is None or spec.tau is None:
            errors.append("kappa and tau are required")
        elif spec.kappa - 4 * spec.tau ** 2 == 0:
            errors.append("kappa - 4 tau^2 must be nonzero")

    elif family == AmbientFamily.S2XR2:
        if spec.case is None:
            errors.append("case is required (Slice, S2xS1 or S1xR2)")
        elif spec.case == S2R2Case.S2XS1:
            if spec.b is None or spec.b <= 0:
                errors.append("b must be positive")
        elif spec.case == S2R2Case.S1XR2:
            if spec.phi_a is None and spec.a is None:
                errors.append("a or phi_a is required")
            if spec.a is not None and not 0 < spec.a < 1:
                errors.append("a must lie in (0, 1)")
            if spec.phi_a is not None and not 0 < spec.phi_a < np.pi:
                errors.append("phi_a must lie in (0, pi)")
            if spec.a is not None and spec.phi_a is not None:
                if abs(np.sin(spec.phi_a) - spec.a) > 1e-12:
                    errors.append("a must equal sin(phi_a)")

    elif family == AmbientFamily.S2XS2:
        if spec.s is None or not -1 < spec.s < 1:
            errors.append("s must lie in (-1, 1)")

    elif family == AmbientFamily.H2XH2:
        if spec.s is None or spec.s <= 1:
            errors.append("s must exceed 1")

    elif family == AmbientFamily.BUMP_PRODUCT:
        missing = [k for k in ("p", "h", "sigma", "R", "O") if getattr(spec, k) is None]
        if missing:
            errors.append(f"missing bump parameters: {', '.join(missing)}")
        else:
            if spec.sigma <= 0:
                errors.append("sigma must be positive")
            if spec.R <= spec.sigma:
                errors.append("R must exceed sigma")
            offset = float(np.hypot(spec.p[0] - spec.O[0], spec.p[1] - spec.O[1]))
            if offset >= spec.R - spec.sigma:
                errors.append("|p - O| must be below R - sigma")

    return errors


class NormalFrameContext(BaseModel):
    """How the unit normal sits relative to the ambient structure"""

    model_config = ConfigDict(frozen=True)

    nu: Optional[float] = None  # EkTau angle function <xi, N>
    C: Optional[int] = None     # S2xR2 product-structure constant <PN, N>
    s: Optional[float] = None   # diagonal families base-point invariant

    @field_validator("C")
    @classmethod
    def check_product_constant(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v not in (-1, 1):
            raise ValueError("C must be -1 or +1")
        return v


class CurvatureFactor(BaseModel):
    """Constant-curvature factor with the Gram matrix of its frame components.

    gram[i, j] = <(e_i)_a, (e_j)_a> in the frame (N, e_1, ..., e_n), where
    (.)_a is the projection to this factor.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    curvature: float
    dim: int = Field(..., ge=1)
    gram: np.ndarray

    @field_validator("gram", mode="before")
    @classmethod
    def coerce_gram(cls, v: Any) -> np.ndarray:
        return require_symmetric(as_square_matrix(v, "gram"), name="gram")


class ProductCurvatureModel(BaseModel):
    """Riemannian product of constant-curvature factors along a normal geodesic"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    factors: List[CurvatureFactor]

    def tensor(self) -> np.ndarray:
        """R_ijkl over the full frame (index 0 is N), with K(X, Y) = R(X, Y, Y, X)"""
        m = self.n + 1
        R = np.zeros((m, m, m, m))
        for factor in self.factors:
            G = factor.gram
            R += factor.curvature * (
                np.einsum("il,jk->ijkl", G, G) - np.einsum("ik,jl->ijkl", G, G)
            )
        return R

    def tangent_tensor(self) -> np.ndarray:
        return self.tensor()[1:, 1:, 1:, 1:]

    def normal_operator(self) -> np.ndarray:
        """Matrix of X -> R(X, N)N on the tangent frame"""
        R_bar = np.zeros((self.n, self.n))
        for factor in self.factors:
            G = factor.gram
            R_bar += factor.curvature * (G[1:, 1:] * G[0, 0] - np.outer(G[1:, 0], G[0, 1:]))
        return 0.5 * (R_bar + R_bar.T)

    def ricci_normal(self) -> float:
        return float(np.trace(self.normal_operator()))


class AmbientBounds(BaseModel):
    """Curvature bounds entering C~ = sup|Ric| + 4 sup|R| + 2 sup|nabla R|"""

    sup_ricci: float
    sup_curvature: float
    sup_curvature_derivative: float = 0.0
    norm: CurvatureNorm = CurvatureNorm.OPERATOR
    note: Optional[str] = None

    @property
    def C_tilde(self) -> float:
        return self.sup_ricci + 4.0 * self.sup_curvature + 2.0 * self.sup_curvature_derivative


class RotatingFrameModel(BaseModel):
    """E(kappa, tau) Jacobi data in the non-parallel frame {U/|U|, JU/|JU|}.

    D solves D'' + 2 omega D' + (omega^2 + K) D = 0 and A = -D'D^-1 - omega.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kappa: float
    tau: float
    H: float
    nu: float
    delta: float
    K: np.ndarray
    omega: np.ndarray

    @property
    def ricci_normal(self) -> float:
        return float(np.trace(self.K))
