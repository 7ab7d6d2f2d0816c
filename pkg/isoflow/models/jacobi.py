from typing import Any, List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from isoflow.utils.validators import as_square_matrix, require_symmetric


class ShapeOperator(BaseModel):
    """Symmetric shape operator A_0 in a parallel orthonormal frame"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def check_matrix(cls, v: Any) -> np.ndarray:
        return require_symmetric(as_square_matrix(v, "shape operator"), name="shape operator")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def mean_curvature(self) -> float:
        return self.trace / self.n

    def principal_curvatures(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def flipped(self) -> "ShapeOperator":
        """Shape operator with respect to -N"""
        return ShapeOperator(matrix=-self.matrix)

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "ShapeOperator":
        return cls(matrix=np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def ektau(cls, tau: float, H: float) -> "ShapeOperator":
        """Isoparametric surface of E(kappa, tau) in the frame {U/|U|, JU/|JU|}"""
        return cls(matrix=np.array([[0.0, -tau], [-tau, 2.0 * H]]))


class JacobiState(BaseModel):
    """(r, D(r), D'(r)) for the Jacobi endomorphism along a normal geodesic"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    r: float
    D: np.ndarray
    Dprime: np.ndarray

    @classmethod
    def initial(cls, A0: ShapeOperator) -> "JacobiState":
        return cls(r=0.0, D=np.eye(A0.n), Dprime=-A0.matrix.copy())

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.D))


class ParallelGeometry(BaseModel):
    """Geometry of the parallel hypersurface at distance r, H = trace(A)/n"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    r: float
    H: float
    A: np.ndarray
    detD: float
    normA2: float

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def principal_curvatures(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.A)


def geometry_arrays(samples: List[ParallelGeometry]):
    """Stack r, H and |A|^2 of a sample list"""
    r = np.array([g.r for g in samples], dtype=float)
    H = np.array([g.H for g in samples], dtype=float)
    normA2 = np.array([g.normA2 for g in samples], dtype=float)
    return r, H, normA2
