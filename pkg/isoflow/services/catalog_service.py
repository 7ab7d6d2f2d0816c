import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np

from isoflow.models.ambient import AmbientFamily, NormalFrameContext, S2R2Case
from isoflow.models.catalog import AnalyticKind, FamilySolution, PairModel, Provenance, TangentClass
from isoflow.models.jacobi import ShapeOperator
from isoflow.services.ambient_service import AmbientService
from isoflow.services.jacobi_service import JacobiService
from isoflow.utils.errors import (
    DegenerateCurve,
    DegenerateDelta,
    ModelConstructionFailure,
    ParameterViolation,
)
from isoflow.utils.gtrig import c_delta, s_delta

logger = logging.getLogger("isoflow.catalog_service")

SQRT2 = math.sqrt(2.0)

PAPER, DERIVED = Provenance.PAPER, Provenance.DERIVED


def _vector_field_product(model: PairModel):
    """Bilinear form of one factor's ambient space (R^3 or L^3)"""
    signature = np.array([1.0, 1.0, 1.0]) if model == PairModel.SPHERE else np.array([1.0, 1.0, -1.0])

    def inner(x, y):
        return float(np.sum(signature * np.asarray(x) * np.asarray(y)))

    return inner


class CatalogService:
    """Service for the closed-form isoparametric families"""

    def __init__(self, ambient_service: AmbientService, jacobi_service: JacobiService):
        self.ambient = ambient_service
        self.jacobi = jacobi_service

    # E(kappa, tau)

    def _check_ektau(self, kappa: float, tau: float):
        if kappa - 4 * tau ** 2 == 0:
            raise DegenerateDelta(["kappa - 4 tau^2 must be nonzero"], family=AmbientFamily.EKTAU.value)

    def _ektau_eigenvalues(self, tau: float):
        def eigenvalues(H: float) -> np.ndarray:
            root = math.sqrt(H * H + tau * tau)
            return np.array([H - root, H + root])
        return eigenvalues

    def ektau_vertical_cylinder(self, kappa: float, tau: float, k_g: float) -> FamilySolution:
        """Vertical cylinder over a curve of geodesic curvature k_g = 2H"""
        self._check_ektau(kappa, tau)
        if k_g == 0:
            raise DegenerateCurve(["k_g must be nonzero (minimal cylinder has no closed form)"], family="EkTau")

        delta = -kappa
        space = self.ambient.build_spec({"family": "EkTau", "kappa": kappa, "tau": tau})
        frame = self.ambient.rotating_frame_model(kappa, tau, k_g / 2.0, 0.0)
        eig = self._ektau_eigenvalues(tau)

        def H_of_r(r: float) -> float:
            c = c_delta(delta, r)
            s = s_delta(delta, r)
            return (k_g * c + kappa * s) / (2.0 * (c - k_g * s))

        def relation(eps: float, t: float) -> float:
            return c_delta(delta, eps) + (kappa / k_g) * s_delta(delta, eps) - math.exp(kappa * t / 2.0)

        T_exact = self.exact_singular_time(kappa, k_g)
        focal = self._cylinder_focal(kappa, k_g)

        return FamilySolution(
            family="EkTauVerticalCylinder",
            params={"kappa": kappa, "tau": tau, "k_g": k_g},
            n=2,
            space=space,
            context=NormalFrameContext(nu=0.0),
            shape_operator=ShapeOperator.ektau(tau, k_g / 2.0),
            H_of_r=H_of_r,
            eigenvalues_of_r=lambda r: eig(H_of_r(r)),
            analytic=AnalyticKind.IMPLICIT,
            implicit_relation=relation,
            focal_r=focal,
            singular_time=T_exact,
            closed_form_D=lambda r: self.jacobi.closed_form_D_ektau(kappa, tau, k_g / 2.0, 0.0, r),
            rotation=frame.omega,
            formulas={
                "detD": "c_{-kappa}(r) - k_g s_{-kappa}(r)",
                "H_of_r": "(k_g c_{-kappa}(r) + kappa s_{-kappa}(r)) / (2 (c_{-kappa}(r) - k_g s_{-kappa}(r)))",
                "implicit": "c_{-kappa}(eps) + (kappa/k_g) s_{-kappa}(eps) = exp(kappa t / 2)",
                "singular_time": "ln(1 + kappa/k_g^2)/kappa",
            },
            provenance={"detD": PAPER, "H_of_r": PAPER, "implicit": PAPER, "singular_time": DERIVED},
            notes={
                "ricci_normal": frame.ricci_normal,
                "delta": delta,
                "printed_singular_time": self.printed_singular_time(kappa, k_g),
            },
        )

    def _cylinder_focal(self, kappa: float, k_g: float) -> Optional[float]:
        # First zero of c_{-kappa}(r) - k_g s_{-kappa}(r) in the direction of sign(k_g)
        sign = 1.0 if k_g > 0 else -1.0
        k = abs(k_g)
        if kappa == 0:
            return sign / k
        if kappa > 0:
            root = math.sqrt(kappa)
            return sign * math.atan(root / k) / root
        root = math.sqrt(-kappa)
        if k <= root:
            return None
        return sign * math.atanh(root / k) / root

    def exact_singular_time(self, kappa: float, k_g: float) -> Optional[float]:
        """Extinction time of a vertical cylinder, None when the flow is eternal"""
        if k_g == 0:
            return None
        k2 = k_g * k_g
        if kappa == 0:
            return 1.0 / k2
        if k2 + kappa <= 0:
            return None
        return math.log1p(kappa / k2) / kappa

    def printed_singular_time(self, kappa: float, k_g: float) -> Optional[float]:
        """Singular time from the closed formulas quoted for space forms"""
        if kappa == 0 or k_g == 0:
            return None
        ratio2 = (k_g / kappa) ** 2
        if kappa > 0:
            return 0.25 * math.log((ratio2 + 1.0) / ratio2)
        if abs(k_g) > 1 and ratio2 > 1:
            return 0.25 * math.log(ratio2 / (ratio2 - 1.0))
        return None

    def ektau_parabolic_helicoid(self, kappa: float, tau: float, H: float) -> FamilySolution:
        """Parabolic helicoid, a translating parallel family with constant H"""
        self._check_ektau(kappa, tau)
        if 4 * H * H + kappa >= 0:
            raise ParameterViolation(["4H^2 + kappa must be negative"], family="EkTau")

        nu = math.sqrt((4 * H * H + kappa) / (kappa - 4 * tau ** 2))
        frame = self.ambient.rotating_frame_model(kappa, tau, H, nu)
        space = self.ambient.build_spec({"family": "EkTau", "kappa": kappa, "tau": tau})
        eigs = self._ektau_eigenvalues(tau)(H)

        return FamilySolution(
            family="EkTauParabolicHelicoid",
            params={"kappa": kappa, "tau": tau, "H": H},
            n=2,
            space=space,
            context=NormalFrameContext(nu=nu),
            shape_operator=ShapeOperator.ektau(tau, H),
            H_of_r=lambda r: H,
            eigenvalues_of_r=lambda r: eigs.copy(),
            analytic=AnalyticKind.EXPLICIT,
            epsilon_of_t=lambda t: H * t,
            implicit_relation=lambda eps, t: eps - H * t,
            closed_form_D=lambda r: self.jacobi.closed_form_D_ektau(kappa, tau, H, nu, r),
            rotation=frame.omega,
            formulas={"nu^2": "(4H^2 + kappa)/(kappa - 4 tau^2)", "epsilon": "H t", "detD": "exp(-2 H r)"},
            provenance={"nu^2": PAPER, "epsilon": PAPER, "detD": DERIVED},
            notes={"ricci_normal": frame.ricci_normal, "delta": frame.delta},
        )

    def ektau_horizontal_slice(self, kappa: float) -> FamilySolution:
        """Horizontal slice Q^2_kappa x {t0} of the product E(kappa, 0), totally geodesic"""
        self._check_ektau(kappa, 0.0)
        space = self.ambient.build_spec({"family": "EkTau", "kappa": kappa, "tau": 0.0})
        return FamilySolution(
            family="EkTauHorizontalSlice",
            params={"kappa": kappa},
            n=2,
            space=space,
            context=NormalFrameContext(nu=1.0),
            shape_operator=ShapeOperator.diagonal([0.0, 0.0]),
            H_of_r=lambda r: 0.0,
            eigenvalues_of_r=lambda r: np.zeros(2),
            analytic=AnalyticKind.EXPLICIT,
            epsilon_of_t=lambda t: 0.0,
            implicit_relation=lambda eps, t: eps,
            closed_form_D=lambda r: self.jacobi.closed_form_D_ektau(kappa, 0.0, 0.0, 1.0, r),
            formulas={"epsilon": "0"},
            provenance={"epsilon": PAPER},
            notes={"ricci_normal": 0.0},
        )

    # S^2 x R^2

    def s2r2_family(
        self,
        case: S2R2Case,
        b: Optional[float] = None,
        a: Optional[float] = None,
        phi_a: Optional[float] = None,
    ) -> FamilySolution:
        """The three isoparametric families of S^2 x R^2"""
        case = S2R2Case(case)
        data = {"family": "S2xR2", "case": case.value, "b": b, "a": a, "phi_a": phi_a}
        space = self.ambient.build_spec({k: v for k, v in data.items() if v is not None})
        ctx = self.ambient.default_context(space)
        model = self.ambient.curvature_model(space, ctx)

        if case == S2R2Case.SLICE:
            return FamilySolution(
                family="S2xR2Slice",
                params={},
                n=3,
                space=space,
                context=ctx,
                shape_operator=ShapeOperator.diagonal([0.0, 0.0, 0.0]),
                H_of_r=lambda r: 0.0,
                eigenvalues_of_r=lambda r: np.zeros(3),
                analytic=AnalyticKind.EXPLICIT,
                epsilon_of_t=lambda t: 0.0,
                implicit_relation=lambda eps, t: eps,
                curvature_model=model,
                parallel_A=True,
                formulas={"epsilon": "0"},
                provenance={"epsilon": PAPER},
            )

        if case == S2R2Case.S2XS1:
            return FamilySolution(
                family="S2xS1",
                params={"b": b},
                n=3,
                space=space,
                context=ctx,
                shape_operator=ShapeOperator.diagonal([0.0, 0.0, -1.0 / b]),
                H_of_r=lambda r: -1.0 / (3.0 * (b + r)),
                eigenvalues_of_r=lambda r: np.array([0.0, 0.0, -1.0 / (b + r)]),
                analytic=AnalyticKind.EXPLICIT,
                epsilon_of_t=lambda t: math.sqrt(max(b * b - 2.0 * t / 3.0, 0.0)) - b,
                implicit_relation=lambda eps, t: 3.0 * (eps + b) ** 2 - (3.0 * b * b - 2.0 * t),
                focal_r=-b,
                singular_time=1.5 * b * b,
                curvature_model=model,
                parallel_A=True,
                formulas={
                    "H_of_r": "-1/(3(b + r))",
                    "epsilon": "sqrt(b^2 - 2t/3) - b",
                    "singular_time": "3 b^2 / 2",
                },
                provenance={"H_of_r": PAPER, "epsilon": PAPER, "singular_time": DERIVED},
            )

        phi = space.colatitude()
        return self._circle_times_flat(
            "S1xR2", {"phi_a": phi}, phi, space, ctx, model,
            provenance={"H_of_r": PAPER, "implicit": PAPER, "singular_time": DERIVED},
        )

    def s2s1_cylinder(self, a: Optional[float] = None, phi_a: Optional[float] = None) -> FamilySolution:
        """S(a) x S^2 in S^2 x S^2, the same parallel geometry as S^1(a) x R^2"""
        spec = self.ambient.build_spec(
            {k: v for k, v in {"family": "S2xR2", "case": "S1xR2", "a": a, "phi_a": phi_a}.items() if v is not None}
        )
        phi = spec.colatitude()
        space = self.ambient.build_spec({"family": "S2xS2", "s": 0.0})
        return self._circle_times_flat(
            "S1xS2", {"phi_a": phi}, phi, space, NormalFrameContext(C=1), self.ambient.s2s1_model(),
            provenance={"H_of_r": DERIVED, "implicit": DERIVED, "singular_time": DERIVED},
        )

    def _circle_times_flat(self, family, params, phi, space, ctx, model, provenance) -> FamilySolution:
        cos_phi = math.cos(phi)

        def epsilon_of_t(t: float) -> float:
            return phi - math.acos(max(-1.0, min(1.0, cos_phi * math.exp(t / 3.0))))

        if abs(cos_phi) < 1e-15:
            focal, T = None, None
        elif cos_phi > 0:
            focal, T = phi, 3.0 * math.log(1.0 / cos_phi)
        else:
            focal, T = phi - math.pi, 3.0 * math.log(-1.0 / cos_phi)

        return FamilySolution(
            family=family,
            params=params,
            n=3,
            space=space,
            context=ctx,
            shape_operator=ShapeOperator.diagonal([1.0 / math.tan(phi), 0.0, 0.0]),
            H_of_r=lambda r: 1.0 / (3.0 * math.tan(phi - r)),
            eigenvalues_of_r=lambda r: np.array([1.0 / math.tan(phi - r), 0.0, 0.0]),
            analytic=AnalyticKind.IMPLICIT,
            epsilon_of_t=epsilon_of_t,
            implicit_relation=lambda eps, t: math.cos(phi - eps) - cos_phi * math.exp(t / 3.0),
            focal_r=focal,
            singular_time=T,
            curvature_model=model,
            parallel_A=True,
            formulas={
                "H_of_r": "cot(phi_a - r)/3",
                "implicit": "cos(phi_a - eps) = cos(phi_a) exp(t/3)",
                "singular_time": "3 ln(1/|cos phi_a|)",
            },
            provenance=provenance,
        )

    # Diagonal families of S^2 x S^2 and H^2 x H^2

    def s2s2_family(self, s: float) -> FamilySolution:
        """M_s = {<p, q> = s} in S^2 x S^2"""
        space = self.ambient.build_spec({"family": "S2xS2", "s": s})
        ctx = self.ambient.default_context(space)
        theta = math.acos(s)

        def phi(r: float) -> float:
            return math.cos(theta - SQRT2 * r)

        def half_angle(r: float) -> Tuple[float, float]:
            # 1 + u = 2 cos^2(psi/2) and 1 - u = 2 sin^2(psi/2), u = phi(r)
            psi = theta - SQRT2 * r
            return abs(math.cos(psi / 2.0)), abs(math.sin(psi / 2.0))

        def eigenvalues(r: float) -> np.ndarray:
            co, si = half_angle(r)
            return np.array([-si / co / SQRT2, co / si / SQRT2, 0.0])

        def H_of_r(r: float) -> float:
            psi = theta - SQRT2 * r
            return SQRT2 * math.cos(psi) / (3.0 * abs(math.sin(psi)))

        def epsilon_of_t(t: float) -> float:
            x = max(-1.0, min(1.0, s * math.exp(2.0 * t / 3.0)))
            return (theta - math.acos(x)) / SQRT2

        if s == 0:
            focal, T = None, None
        elif s > 0:
            focal, T = theta / SQRT2, 1.5 * math.log(1.0 / s)
        else:
            focal, T = (theta - math.pi) / SQRT2, 1.5 * math.log(-1.0 / s)

        return FamilySolution(
            family="S2xS2",
            params={"s": s},
            n=3,
            space=space,
            context=ctx,
            shape_operator=ShapeOperator.diagonal(eigenvalues(0.0)),
            H_of_r=H_of_r,
            eigenvalues_of_r=eigenvalues,
            analytic=AnalyticKind.IMPLICIT,
            epsilon_of_t=epsilon_of_t,
            implicit_relation=lambda eps, t: math.cos(theta - SQRT2 * eps) - s * math.exp(2.0 * t / 3.0),
            focal_r=focal,
            singular_time=T,
            curvature_model=self.ambient.curvature_model(space, ctx),
            formulas={
                "phi": "s cos(sqrt2 r) + sqrt(1 - s^2) sin(sqrt2 r)",
                "H_of_r": "sqrt2 phi / (3 sqrt(1 - phi^2))",
                "eigenvalues": "-(1/sqrt2) sqrt((1-u)/(1+u)), (1/sqrt2) sqrt((1+u)/(1-u)), 0",
                "implicit": "cos(theta_s - sqrt2 eps) = cos(theta_s) exp(2t/3)",
                "singular_time": "(3/2) ln(1/|s|)",
            },
            provenance={"phi": PAPER, "H_of_r": PAPER, "eigenvalues": DERIVED, "implicit": DERIVED, "singular_time": DERIVED},
        )

    def h2h2_family(self, s: float) -> FamilySolution:
        """M_s = {<p, q>_L = -s} in H^2 x H^2"""
        space = self.ambient.build_spec({"family": "H2xH2", "s": s})
        ctx = self.ambient.default_context(space)
        eta = math.acosh(s)

        def phi(r: float) -> float:
            return math.cosh(eta - SQRT2 * r)

        def eigenvalues(r: float) -> np.ndarray:
            # u - 1 = 2 sinh^2(psi/2) and u + 1 = 2 cosh^2(psi/2), u = phi(r)
            psi = eta - SQRT2 * r
            sh, ch = abs(math.sinh(psi / 2.0)), math.cosh(psi / 2.0)
            return np.array([sh / ch / SQRT2, ch / sh / SQRT2, 0.0])

        def H_of_r(r: float) -> float:
            psi = eta - SQRT2 * r
            return SQRT2 * math.cosh(psi) / (3.0 * abs(math.sinh(psi)))

        def epsilon_of_t(t: float) -> float:
            x = max(1.0, s * math.exp(-2.0 * t / 3.0))
            return (eta - math.acosh(x)) / SQRT2

        return FamilySolution(
            family="H2xH2",
            params={"s": s},
            n=3,
            space=space,
            context=ctx,
            shape_operator=ShapeOperator.diagonal(eigenvalues(0.0)),
            H_of_r=H_of_r,
            eigenvalues_of_r=eigenvalues,
            analytic=AnalyticKind.IMPLICIT,
            epsilon_of_t=epsilon_of_t,
            # cosh(eta - sqrt2 eps) decreases to 1, hence the negative exponent
            implicit_relation=lambda eps, t: math.cosh(eta - SQRT2 * eps) - s * math.exp(-2.0 * t / 3.0),
            focal_r=eta / SQRT2,
            singular_time=1.5 * math.log(s),
            curvature_model=self.ambient.curvature_model(space, ctx),
            formulas={
                "phi": "s cosh(sqrt2 r) - sqrt(s^2 - 1) sinh(sqrt2 r)",
                "H_of_r": "sqrt2 phi / (3 sqrt(phi^2 - 1))",
                "eigenvalues": "(1/sqrt2) sqrt((u-1)/(u+1)), (1/sqrt2) sqrt((u+1)/(u-1)), 0",
                "implicit": "cosh(eta_s - sqrt2 eps) = cosh(eta_s) exp(-2t/3)",
                "singular_time": "(3/2) ln(s)",
            },
            provenance={"phi": PAPER, "H_of_r": PAPER, "eigenvalues": PAPER, "implicit": DERIVED, "singular_time": DERIVED},
            notes={"implicit_sign": "exponent -2t/3; a +2t/3 exponent does not solve the flow equation"},
        )

    def pair_triple(self, s: float, model: PairModel) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Concrete (p, q, w) with <p, q> = s (sphere) or -s (Lorentz), |w|^2 = 1/2, w orthogonal to p, q"""
        model = PairModel(model)
        if model == PairModel.SPHERE:
            if not -1 < s < 1:
                raise ModelConstructionFailure(f"no sphere triple for s={s}")
            p = np.array([1.0, 0.0, 0.0])
            q = np.array([s, math.sqrt(1.0 - s * s), 0.0])
            w = np.array([0.0, 0.0, 1.0 / SQRT2])
            expected = {"pp": 1.0, "qq": 1.0, "pq": s}
        else:
            if not s > 1:
                raise ModelConstructionFailure(f"no Lorentz triple for s={s}")
            p = np.array([0.0, 0.0, 1.0])
            q = np.array([math.sqrt(s * s - 1.0), 0.0, s])
            w = np.array([0.0, 1.0 / SQRT2, 0.0])
            expected = {"pp": -1.0, "qq": -1.0, "pq": -s}

        inner = _vector_field_product(model)
        checks = {
            "pp": inner(p, p), "qq": inner(q, q), "pq": inner(p, q),
            "ww": inner(w, w), "wp": inner(w, p), "wq": inner(w, q),
        }
        expected.update({"ww": 0.5, "wp": 0.0, "wq": 0.0})
        bad = [k for k, v in expected.items() if abs(checks[k] - v) > 1e-12 * max(1.0, abs(s))]
        if bad:
            raise ModelConstructionFailure(f"triple violates {', '.join(bad)}")
        return p, q, w

    def tangent_vector(self, s: float, vector_class: TangentClass, model: PairModel):
        p, q, w = self.pair_triple(s, model)
        vector_class = TangentClass(vector_class)
        if vector_class == TangentClass.W_W:
            return w, w
        if vector_class == TangentClass.W_MINUS_W:
            return w, -w
        return q - s * p, -p + s * q

    def product_shape_operator(self, s: float, vector_class: TangentClass, model: PairModel) -> float:
        """Eigenvalue of the displayed shape operator on one tangent class.

        sphere:  (s(v1,v2) - (v2,v1) + (<v2,p>p, <v1,q>q)) / sqrt(2(1 - s^2))
        Lorentz: (s(v1,v2) - (v2,v1) + (<v1,q>p, <v2,p>q)) / sqrt(2(s^2 - 1))
        """
        model = PairModel(model)
        p, q, _ = self.pair_triple(s, model)
        v1, v2 = self.tangent_vector(s, vector_class, model)
        inner = _vector_field_product(model)

        if model == PairModel.SPHERE:
            scale = math.sqrt(2.0 * (1.0 - s * s))
            a1 = s * v1 - v2 + inner(v2, p) * p
            a2 = s * v2 - v1 + inner(v1, q) * q
        else:
            scale = math.sqrt(2.0 * (s * s - 1.0))
            a1 = s * v1 - v2 + inner(v1, q) * p
            a2 = s * v2 - v1 + inner(v2, p) * q
        a1, a2 = a1 / scale, a2 / scale

        norm2 = inner(v1, v1) + inner(v2, v2)
        value = (inner(a1, v1) + inner(a2, v2)) / norm2
        residual = max(np.max(np.abs(a1 - value * v1)), np.max(np.abs(a2 - value * v2)))
        if residual > 1e-9 * max(1.0, abs(value)):
            raise ModelConstructionFailure(f"{vector_class} is not an eigenvector (residual {residual:.3e})")
        return float(value)

    def lorentz_shape_operator(self, s: float, vector_class: TangentClass) -> float:
        """Eigenvalue of the H^2 x H^2 shape operator on a tangent class"""
        if not s > 1:
            raise ParameterViolation(["s must exceed 1"], family="H2xH2")
        return self.product_shape_operator(s, vector_class, PairModel.LORENTZ)

    def displacement(self, s: float, r: float, model: PairModel) -> Tuple[np.ndarray, np.ndarray]:
        """(P_r, Q_r) of the displayed parallel displacement of the base triple"""
        model = PairModel(model)
        p, q, _ = self.pair_triple(s, model)
        h = r / SQRT2
        if model == PairModel.SPHERE:
            scale = math.sqrt(1.0 - s * s)
            P_r = math.cos(h) * p + math.sin(h) * (q - s * p) / scale
            Q_r = math.cos(h) * q + math.sin(h) * (p - s * q) / scale
        else:
            scale = math.sqrt(s * s - 1.0)
            P_r = math.cosh(h) * p + math.sinh(h) * (q - s * p) / scale
            Q_r = math.cosh(h) * q + math.sinh(h) * (p - s * q) / scale
        return P_r, Q_r

    def displacement_invariant(self, s: float, r: float, model: PairModel) -> float:
        """Invariant of the displaced pair: <P, Q> (sphere) or -<P, Q>_L (Lorentz)"""
        model = PairModel(model)
        P_r, Q_r = self.displacement(s, r, model)
        value = _vector_field_product(model)(P_r, Q_r)
        return value if model == PairModel.SPHERE else -value

    # Space forms

    def spaceform_sphere(self, c: float, n: int, R0: float) -> FamilySolution:
        """Geodesic sphere of radius R0 in the space form of curvature c, inward normal"""
        space = self.ambient.build_spec({"family": "SpaceForm", "c": c, "n": n})
        errors = []
        if R0 <= 0:
            errors.append("R0 must be positive")
        if c > 0 and R0 * math.sqrt(c) >= math.pi:
            errors.append("R0 must be below pi/sqrt(c)")
        if errors:
            raise ParameterViolation(errors, family="SpaceForm")

        delta = -c

        def cot_c(rho: float) -> float:
            return c_delta(delta, rho) / s_delta(delta, rho)

        if c == 0:
            T = 0.5 * R0 * R0
            rho_of_t = lambda t: math.sqrt(max(R0 * R0 - 2.0 * t, 0.0))
            relation = lambda eps, t: (R0 - eps) ** 2 - (R0 * R0 - 2.0 * t)
        elif c > 0:
            k = math.sqrt(c)
            cos0 = math.cos(k * R0)
            T = math.log(1.0 / abs(cos0)) / c if abs(cos0) >= 1e-15 else None
            rho_of_t = lambda t: math.acos(max(-1.0, min(1.0, cos0 * math.exp(c * t)))) / k
            relation = lambda eps, t: math.cos(k * (R0 - eps)) - cos0 * math.exp(c * t)
        else:
            k = math.sqrt(-c)
            cosh0 = math.cosh(k * R0)
            T = math.log(cosh0) / k ** 2
            rho_of_t = lambda t: math.acosh(max(1.0, cosh0 * math.exp(-k * k * t))) / k
            relation = lambda eps, t: math.cosh(k * (R0 - eps)) - cosh0 * math.exp(-k * k * t)

        focal = R0
        if c > 0:
            if abs(cos0) < 1e-15:
                # equator, totally geodesic
                focal, T = None, None
            elif cos0 < 0:
                # beyond the equator the sphere sweeps out to the antipodal point
                focal = R0 - math.pi / k

        def epsilon_of_t(t: float) -> float:
            return R0 - rho_of_t(t)

        return FamilySolution(
            family="SpaceFormSphere",
            params={"c": c, "n": n, "R0": R0},
            n=n,
            space=space,
            context=NormalFrameContext(),
            shape_operator=ShapeOperator.diagonal([cot_c(R0)] * n),
            H_of_r=lambda r: cot_c(R0 - r),
            eigenvalues_of_r=lambda r: np.full(n, cot_c(R0 - r)),
            analytic=AnalyticKind.EXPLICIT,
            epsilon_of_t=epsilon_of_t,
            implicit_relation=relation,
            focal_r=focal,
            singular_time=T,
            curvature_model=self.ambient.curvature_model(space),
            parallel_A=True,
            formulas={
                "H_of_r": "c_{-c}(R0 - r)/s_{-c}(R0 - r)",
                "singular_time": "R0^2/2 (c=0), ln(1/|cos(sqrt(c) R0)|)/c (c>0), ln(cosh(sqrt(-c) R0))/(-c) (c<0)",
            },
            provenance={"H_of_r": Provenance.TRIVIAL, "singular_time": DERIVED},
        )

    def spaceform_clifford(self, n1: int, n2: int, theta: float) -> FamilySolution:
        """S^{n1}(cos theta) x S^{n2}(sin theta) in the unit sphere S^{n1+n2+1}"""
        errors = []
        if n1 < 1 or n2 < 1:
            errors.append("n1 and n2 must be positive")
        if not 0 < theta < math.pi / 2:
            errors.append("theta must lie in (0, pi/2)")
        if errors:
            raise ParameterViolation(errors, family="SpaceForm")

        n = n1 + n2
        space = self.ambient.build_spec({"family": "SpaceForm", "c": 1.0, "n": n})

        def eigenvalues(r: float) -> np.ndarray:
            psi = theta - r
            return np.array([-math.tan(psi)] * n1 + [1.0 / math.tan(psi)] * n2)

        H0 = (n2 / math.tan(theta) - n1 * math.tan(theta)) / n
        if abs(H0) < 1e-15:
            focal = None
        elif H0 > 0:
            focal = theta
        else:
            focal = theta - math.pi / 2

        return FamilySolution(
            family="SpaceFormClifford",
            params={"n1": n1, "n2": n2, "theta": theta},
            n=n,
            space=space,
            context=NormalFrameContext(),
            shape_operator=ShapeOperator.diagonal(eigenvalues(0.0)),
            H_of_r=lambda r: float(np.sum(eigenvalues(r))) / n,
            eigenvalues_of_r=eigenvalues,
            analytic=AnalyticKind.NONE,
            focal_r=focal,
            curvature_model=self.ambient.curvature_model(space),
            parallel_A=True,
            formulas={"eigenvalues": "-tan(theta - r) (x n1), cot(theta - r) (x n2)"},
            provenance={"eigenvalues": Provenance.TRIVIAL},
        )

    def build(self, name: str, params: Dict[str, float]) -> FamilySolution:
        """Construct a family by name, used by scenario files"""
        builders = {
            "EkTauVerticalCylinder": lambda: self.ektau_vertical_cylinder(params["kappa"], params["tau"], params["k_g"]),
            "EkTauParabolicHelicoid": lambda: self.ektau_parabolic_helicoid(params["kappa"], params["tau"], params["H"]),
            "EkTauHorizontalSlice": lambda: self.ektau_horizontal_slice(params["kappa"]),
            "S2xR2Slice": lambda: self.s2r2_family(S2R2Case.SLICE),
            "S2xS1": lambda: self.s2r2_family(S2R2Case.S2XS1, b=params["b"]),
            "S1xR2": lambda: self.s2r2_family(S2R2Case.S1XR2, a=params.get("a"), phi_a=params.get("phi_a")),
            "S1xS2": lambda: self.s2s1_cylinder(a=params.get("a"), phi_a=params.get("phi_a")),
            "S2xS2": lambda: self.s2s2_family(params["s"]),
            "H2xH2": lambda: self.h2h2_family(params["s"]),
            "SpaceFormSphere": lambda: self.spaceform_sphere(params["c"], int(params["n"]), params["R0"]),
            "SpaceFormClifford": lambda: self.spaceform_clifford(
                int(params["n1"]), int(params["n2"]), params["theta"]
            ),
        }
        if name not in builders:
            raise ParameterViolation([f"unknown family '{name}'"])
        try:
            return builders[name]()
        except KeyError as e:
            raise ParameterViolation([f"missing parameter {e.args[0]}"], family=name)
