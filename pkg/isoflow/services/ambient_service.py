import logging
from typing import Any, Dict, Optional

import numpy as np

from isoflow.models.ambient import (
    AmbientBounds,
    AmbientFamily,
    AmbientSpec,
    CurvatureFactor,
    NormalFrameContext,
    ProductCurvatureModel,
    RotatingFrameModel,
    S2R2Case,
)
from isoflow.models.curve import BumpMetric
from isoflow.utils.config import CurvatureNorm, Settings, get_settings
from isoflow.utils.errors import DegenerateDelta, ParameterViolation, UnsupportedFamily
from isoflow.utils.validators import build_model

logger = logging.getLogger("isoflow.ambient_service")

HALF = 0.5

# Gram matrices of the two factors of S2xS2 / H2xH2 in the frame
# (N, (w,w), (w,-w), complement); every vector is split evenly between factors
_DIAGONAL_FIRST = np.array([
    [HALF, 0.0, 0.0, HALF],
    [0.0, HALF, HALF, 0.0],
    [0.0, HALF, HALF, 0.0],
    [HALF, 0.0, 0.0, HALF],
])
_DIAGONAL_SECOND = np.eye(4) - _DIAGONAL_FIRST


class AmbientService:
    """Service for ambient curvature data along normal geodesics"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def build_spec(self, data: Dict[str, Any]) -> AmbientSpec:
        """Validate raw parameters into an AmbientSpec"""
        return build_model(AmbientSpec, data)

    def default_context(self, space: AmbientSpec) -> NormalFrameContext:
        """Normal frame context implied by the family parameters"""
        if space.family == AmbientFamily.S2XR2:
            C = 1 if space.case == S2R2Case.S1XR2 else -1
            return NormalFrameContext(C=C)
        if space.family in (AmbientFamily.S2XS2, AmbientFamily.H2XH2):
            return NormalFrameContext(s=space.s)
        if space.family == AmbientFamily.EKTAU:
            return NormalFrameContext(nu=0.0)
        return NormalFrameContext()

    def curvature_model(self, space: AmbientSpec, ctx: Optional[NormalFrameContext] = None) -> ProductCurvatureModel:
        """Product curvature model in the family's adapted frame"""
        ctx = ctx or self.default_context(space)
        n = space.n
        family = space.family

        if family == AmbientFamily.SPACE_FORM:
            return ProductCurvatureModel(
                n=n, factors=[CurvatureFactor(curvature=space.c, dim=n + 1, gram=np.eye(n + 1))]
            )

        if family == AmbientFamily.S2XR2:
            C = ctx.C if ctx.C is not None else self.default_context(space).C
            expected = self.default_context(space).C
            if C != expected:
                raise ParameterViolation(
                    [f"C={C} contradicts case {space.case.value} (expected {expected})"], family=family.value
                )
            return self._s2r2_model(C)

        if family in (AmbientFamily.S2XS2, AmbientFamily.H2XH2):
            c = 1.0 if family == AmbientFamily.S2XS2 else -1.0
            return ProductCurvatureModel(
                n=3,
                factors=[
                    CurvatureFactor(curvature=c, dim=2, gram=_DIAGONAL_FIRST),
                    CurvatureFactor(curvature=c, dim=2, gram=_DIAGONAL_SECOND),
                ],
            )

        logger.error(f"No constant curvature operator for {family.value}")
        raise UnsupportedFamily(
            f"{family.value} has no constant curvature operator along normal geodesics"
        )

    def _s2r2_model(self, C: int) -> ProductCurvatureModel:
        if C == -1:
            # frame (N, u1, u2, u3): N and u3 in the flat factor, u1, u2 tangent to S^2
            gram = np.diag([0.0, 1.0, 1.0, 0.0])
        else:
            # frame (N, v1, v2, v3): N and v1 tangent to S^2, v2, v3 in R^2
            gram = np.diag([1.0, 1.0, 0.0, 0.0])
        return ProductCurvatureModel(
            n=3,
            factors=[
                CurvatureFactor(curvature=1.0, dim=2, gram=gram),
                CurvatureFactor(curvature=0.0, dim=2, gram=np.diag([1.0, 1.0, 1.0, 1.0]) - gram),
            ],
        )

    def s2s1_model(self) -> ProductCurvatureModel:
        """S^1(a) x S^2 inside S^2 x S^2, normal tangent to the first factor"""
        gram = np.diag([1.0, 1.0, 0.0, 0.0])
        return ProductCurvatureModel(
            n=3,
            factors=[
                CurvatureFactor(curvature=1.0, dim=2, gram=gram),
                CurvatureFactor(curvature=1.0, dim=2, gram=np.eye(4) - gram),
            ],
        )

    def curvature_operator(self, space: AmbientSpec, ctx: Optional[NormalFrameContext] = None) -> np.ndarray:
        """Constant matrix of X -> R(X, N)N in the family's parallel frame"""
        return self.curvature_model(space, ctx).normal_operator()

    def ricci_normal(self, space: AmbientSpec, ctx: Optional[NormalFrameContext] = None) -> float:
        """Ric(N, N), the trace of the curvature operator"""
        return float(np.trace(self.curvature_operator(space, ctx)))

    def ambient_bounds(self, space: AmbientSpec) -> AmbientBounds:
        """Curvature bounds and C~ under the configured norm convention"""
        norm = self.settings.curvature_norm
        family = space.family

        if family == AmbientFamily.EKTAU:
            bounds = self._ektau_bounds(space.kappa, space.tau, norm)
        elif family == AmbientFamily.BUMP_PRODUCT:
            bounds = self._bump_bounds(space, norm)
        elif family == AmbientFamily.SPACE_FORM:
            bounds = self._factor_bounds([(space.c, space.n + 1)], norm)
        elif family == AmbientFamily.S2XR2:
            bounds = self._factor_bounds([(1.0, 2), (0.0, 2)], norm)
        else:
            c = 1.0 if family == AmbientFamily.S2XS2 else -1.0
            bounds = self._factor_bounds([(c, 2), (c, 2)], norm)

        logger.debug(f"Bounds for {family.value}: C~={bounds.C_tilde} ({norm.value} norm)")
        return bounds

    def factor_bounds(self, factors, norm: Optional[CurvatureNorm] = None) -> AmbientBounds:
        """Bounds for a product of (curvature, dimension) space-form factors"""
        return self._factor_bounds(factors, norm or self.settings.curvature_norm)

    def _factor_bounds(self, factors, norm: CurvatureNorm) -> AmbientBounds:
        # Ric of a dim-d factor of curvature c is c (d - 1); its curvature
        # operator on bivectors is c, over d(d-1)/2 bivectors
        ric_eigs = []
        op_eigs = []
        for c, dim in factors:
            ric_eigs += [c * (dim - 1)] * dim
            op_eigs += [c] * (dim * (dim - 1) // 2)
        return self._bounds_from_eigenvalues(ric_eigs, op_eigs, 0.0, norm)

    def _bounds_from_eigenvalues(self, ric_eigs, op_eigs, nabla: float, norm: CurvatureNorm, note=None) -> AmbientBounds:
        ric = np.abs(np.asarray(ric_eigs, dtype=float))
        op = np.abs(np.asarray(op_eigs, dtype=float))
        if norm == CurvatureNorm.OPERATOR:
            sup_ric = float(ric.max()) if ric.size else 0.0
            sup_r = float(op.max()) if op.size else 0.0
        else:
            # |R|^2 sums R_ijkl^2, four entries per bivector eigenvalue
            sup_ric = float(np.sqrt(np.sum(ric ** 2)))
            sup_r = float(2.0 * np.sqrt(np.sum(op ** 2)))
        return AmbientBounds(
            sup_ricci=sup_ric,
            sup_curvature=sup_r,
            sup_curvature_derivative=nabla,
            norm=norm,
            note=note,
        )

    def _ektau_bounds(self, kappa: float, tau: float, norm: CurvatureNorm) -> AmbientBounds:
        ric_eigs = [kappa - 2 * tau ** 2, kappa - 2 * tau ** 2, 2 * tau ** 2]
        op_eigs = [kappa - 3 * tau ** 2, tau ** 2, tau ** 2]
        nabla = 8.0 * abs(tau) * abs(kappa - 4 * tau ** 2)
        return self._bounds_from_eigenvalues(
            ric_eigs, op_eigs, nabla, norm, note="derivative term uses the bound 8|tau||kappa - 4 tau^2|"
        )

    def _bump_bounds(self, space: AmbientSpec, norm: CurvatureNorm, resolution: int = 401) -> AmbientBounds:
        metric = BumpMetric(p=space.p, h=space.h, sigma=space.sigma)
        if metric.is_flat:
            return AmbientBounds(sup_ricci=0.0, sup_curvature=0.0, norm=norm, note="flat bump (h = 0)")

        axis = np.linspace(-space.sigma, space.sigma, resolution)
        X, Y = np.meshgrid(axis + space.p[0], axis + space.p[1], indexing="ij")
        pts = np.stack([X, Y], axis=-1)
        K = metric.gaussian_curvature(pts)
        dK = np.stack(np.gradient(K, axis, axis), axis=-1)
        g_inv = np.linalg.inv(metric.metric(pts))
        grad_norm = np.sqrt(np.einsum("...i,...ij,...j->...", dK, g_inv, dK))

        sup_K = float(np.max(np.abs(K)))
        # Ambient is the surface times a flat factor: Ric = K on the surface plane
        if norm == CurvatureNorm.OPERATOR:
            sup_ric, sup_r = sup_K, sup_K
        else:
            sup_ric, sup_r = float(np.sqrt(2.0) * sup_K), 2.0 * sup_K
        return AmbientBounds(
            sup_ricci=sup_ric,
            sup_curvature=sup_r,
            sup_curvature_derivative=float(np.max(grad_norm)),
            norm=norm,
            note=f"sampled on a {resolution}x{resolution} grid over the bump support",
        )

    def rotating_frame_model(self, kappa: float, tau: float, H: float, nu: float) -> RotatingFrameModel:
        """E(kappa, tau) data in the frame {U/|U|, JU/|JU|}"""
        if kappa - 4 * tau ** 2 == 0:
            raise DegenerateDelta(["kappa - 4 tau^2 must be nonzero"], family=AmbientFamily.EKTAU.value)
        delta = (kappa - 4 * tau ** 2) * nu ** 2 - kappa
        return RotatingFrameModel(
            kappa=kappa,
            tau=tau,
            H=H,
            nu=nu,
            delta=delta,
            K=np.diag([tau ** 2, -delta - 3 * tau ** 2]),
            omega=np.array([[0.0, -tau], [tau, 0.0]]),
        )
