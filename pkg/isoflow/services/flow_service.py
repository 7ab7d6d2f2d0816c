import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp

from isoflow.models.ambient import ProductCurvatureModel
from isoflow.models.catalog import FamilySolution
from isoflow.models.flow import (
    BoundCheck,
    FlowDescriptor,
    FlowSample,
    FlowStatus,
    FlowTrajectory,
    Route,
    SingularityReport,
    SingularityType,
)
from isoflow.services.jacobi_service import JacobiService
from isoflow.utils.config import Settings, get_settings
from isoflow.utils.errors import InconclusiveWindow, IsoFlowError, NoSingularity, ParameterViolation

logger = logging.getLogger("isoflow.flow_service")

# |H| below this at t_max means the parallels settled on a minimal one
CONVERGED_H = 1e-10


def evo_eq_rhs(normA2: float, ricci: float, contraction: float = 0.0) -> float:
    """2|A|^2(|A|^2 + Ric(N, N)) + 4 (curvature contraction), in summed mean curvature time.

    The contraction is tangent_contraction's, with K(X, Y) = R(X, Y, Y, X). Along a
    trajectory of averaged H the measured d|A|^2/dt is this value over n whenever
    the second fundamental form is parallel.
    """
    return 2.0 * normA2 * (normA2 + ricci) + 4.0 * contraction


def tangent_contraction(A: np.ndarray, model: ProductCurvatureModel) -> float:
    """h^ij h_j^m R_mli^l - h^ij h^lm R_milj with R_ijkl = R(e_i, e_j, e_k, e_l)"""
    R = model.tangent_tensor()
    first = np.einsum("ij,jm,mlil->", A, A, R)
    second = np.einsum("ij,lm,milj->", A, A, R)
    return float(first - second)


def normA2_derivative_r(A: np.ndarray, R_bar: np.ndarray) -> float:
    """d|A|^2/dr = 2 tr(A^3) + 2 tr(A R) along the parallels"""
    return float(2.0 * np.trace(A @ A @ A) + 2.0 * np.trace(A @ R_bar))


class FlowService:
    """Service for the reduced mean curvature flow epsilon' = H(epsilon)"""

    def __init__(self, jacobi_service: JacobiService, settings: Optional[Settings] = None):
        self.jacobi = jacobi_service
        self.settings = settings or jacobi_service.settings or get_settings()

    def descriptor(self, family: FamilySolution, route: Route = Route.CATALOG, window: float = 20.0) -> FlowDescriptor:
        """Build the flow inputs of a family along the catalog or the Jacobi route"""
        route = Route(route)
        n = family.n
        sign = -1 if family.H0 < 0 else 1
        reach = abs(family.focal_r) if family.focal_r is not None else window

        det_source, geometry = self.jacobi_sources(family, sign * 1.05 * reach)

        if route == Route.CATALOG:
            H_of_r = family.H_of_r

            def normA2_of_r(r: float) -> float:
                return float(np.sum(np.square(family.eigenvalues_of_r(r))))

            focal = family.focal_r
        else:
            if geometry is None:
                raise ParameterViolation([f"{family.family} has no Jacobi data"], family=family.family)

            def H_of_r(r: float) -> float:
                return geometry(r).H

            def normA2_of_r(r: float) -> float:
                return geometry(r).normA2

            focal = None
            if family.H0 != 0:
                search = 1.05 * reach
                if family.curvature_model is not None:
                    source = self.jacobi.propagator(family.R_bar, family.shape_operator, sign * search)
                else:
                    source = family.closed_form_D
                distance = self.jacobi.focal_radius(source, window=search, direction=sign)
                focal = None if distance is None else sign * distance

        return FlowDescriptor(
            name=family.family_id,
            n=n,
            route=route,
            H_of_r=H_of_r,
            normA2_of_r=normA2_of_r,
            detD_of_r=det_source,
            focal_r=focal,
            ricci_normal=family.ricci_normal,
        )

    def jacobi_sources(self, family: FamilySolution, r_end: float):
        """det D(r) and parallel geometry callables of a family"""
        n = family.n
        if family.closed_form_D is not None:
            closed = family.closed_form_D
            rotation = family.rotation

            def det_of_r(r: float) -> float:
                return closed(r).det

            def geometry(r: float):
                return self.jacobi.parallel_geometry(closed(r), n, rotation)

            return det_of_r, geometry

        if family.curvature_model is not None:
            propagator = self.jacobi.propagator(family.R_bar, family.shape_operator, r_end)

            def det_of_r(r: float) -> float:
                return propagator.state_at(r).det

            def geometry(r: float):
                return self.jacobi.parallel_geometry(propagator.state_at(r), n)

            return det_of_r, geometry

        return (lambda r: float("nan")), None

    def integrate_flow(
        self,
        descriptor: FlowDescriptor,
        t_max: float,
        rtol: Optional[float] = None,
        atol: Optional[float] = None,
        sample_count: int = 200,
    ) -> FlowTrajectory:
        """Integrate epsilon' = H(epsilon) from epsilon(0) = 0"""
        if t_max <= 0:
            raise ParameterViolation(["t_max must be positive"])
        rtol = rtol or self.settings.rtol
        atol = atol or self.settings.atol
        blowup = self.settings.blowup_h

        sign = descriptor.orientation
        H_of_r = descriptor.H_of_r

        # Integrate rho = sign * epsilon, which increases toward the focal point
        rho_f = None
        if descriptor.focal_r is not None and descriptor.focal_r * sign > 0:
            rho_f = abs(descriptor.focal_r)

        def H_signed(rho: float) -> float:
            if rho_f is not None and rho >= rho_f:
                return 10.0 * blowup
            try:
                return sign * H_of_r(sign * rho)
            except (ZeroDivisionError, ValueError, OverflowError, IsoFlowError):
                return 10.0 * blowup

        def rhs(t, y):
            return [H_signed(y[0])]

        def blowup_event(t, y):
            return blowup - abs(H_signed(y[0]))

        blowup_event.terminal = True
        blowup_event.direction = -1
        events = [blowup_event]

        gap = None
        if rho_f is not None:
            gap = self.settings.stop_gap * rho_f

            def outer_gap(t, y):
                return rho_f - 2.0 * gap - y[0]

            def inner_gap(t, y):
                return rho_f - gap - y[0]

            outer_gap.terminal = False
            outer_gap.direction = -1
            inner_gap.terminal = True
            inner_gap.direction = -1
            events += [outer_gap, inner_gap]

        logger.debug(f"Integrating {descriptor.name} to t={t_max} (focal {descriptor.focal_r})")
        sol = solve_ivp(
            rhs, (0.0, t_max), [0.0], method="DOP853", rtol=rtol, atol=atol,
            dense_output=True, events=events,
        )

        gap_times = {}
        status = FlowStatus.MAX_TIME
        message = None
        if sol.status == -1:
            status = FlowStatus.BLOW_UP
            message = f"step size underflow: {sol.message}"
            logger.warning(f"{descriptor.name}: {message} at t={sol.t[-1]}")
        elif sol.status == 1:
            if gap is not None and sol.t_events[2].size:
                status = FlowStatus.FOCAL_REACHED
                gap_times[2.0 * gap] = float(sol.t_events[1][0]) if sol.t_events[1].size else None
                gap_times[gap] = float(sol.t_events[2][0])
            else:
                status = FlowStatus.BLOW_UP
                message = f"|H| exceeded {blowup}"
        else:
            final_H = abs(H_signed(float(sol.y[0, -1])))
            if final_H < CONVERGED_H and abs(H_of_r(0.0)) > 0:
                status = FlowStatus.CONVERGED

        t_end = float(sol.t[-1])
        dense = sol.sol

        def epsilon_at(t):
            t = np.clip(t, 0.0, t_end)
            values = sign * dense(t)[0]
            return float(values) if np.ndim(values) == 0 else values

        def value(f, eps: float) -> float:
            try:
                return float(f(eps))
            except (ZeroDivisionError, ValueError, OverflowError, IsoFlowError):
                return math.nan

        times = np.union1d(sol.t, np.linspace(0.0, t_end, sample_count))
        samples = []
        for t in times:
            eps = epsilon_at(float(t))
            samples.append(
                FlowSample(
                    t=float(t),
                    epsilon=eps,
                    H=value(H_of_r, eps),
                    normA2=value(descriptor.normA2_of_r, eps),
                    detD=value(descriptor.detD_of_r, eps),
                )
            )

        traj = FlowTrajectory(
            descriptor=descriptor,
            samples=samples,
            status=status,
            t_end=t_end,
            orientation=sign,
            gap_times={k: v for k, v in gap_times.items() if v is not None},
            epsilon_at=epsilon_at,
            message=message,
        )
        logger.info(f"{descriptor.name}: {status.value} at t={t_end:.12g}, epsilon={samples[-1].epsilon:.12g}")
        return traj

    def detect_singularity(self, traj: FlowTrajectory) -> SingularityReport:
        """Locate the singular time of a trajectory that stopped at the focal point"""
        if traj.status in (FlowStatus.MAX_TIME, FlowStatus.CONVERGED, FlowStatus.RUNNING):
            raise NoSingularity(f"{traj.descriptor.name} ended with status {traj.status.value}")

        descriptor = traj.descriptor
        sign = traj.orientation
        notes = []

        if traj.status == FlowStatus.BLOW_UP and not traj.gap_times:
            # No known focal radius: the blow-up point is the best estimate
            focal = traj.final.epsilon
            notes.append("singular time taken at blow-up, no focal radius known")
            return SingularityReport(T=traj.t_end, focal_r=focal, notes=notes)

        focal = descriptor.focal_r
        rho_f = abs(focal)
        gaps = sorted(traj.gap_times)
        inner = gaps[0]
        t_inner = traj.gap_times[inner]

        T_rich = None
        if len(gaps) == 2:
            # T - t grows like gap^2 near the focal point
            t_outer = traj.gap_times[gaps[1]]
            T_rich = (4.0 * t_inner - t_outer) / 3.0

        def dwell(rho: float) -> float:
            H = descriptor.H_of_r(sign * rho)
            return 1.0 / abs(H) if H != 0 else 0.0

        tail, err = quad(dwell, rho_f - inner, rho_f, epsabs=1e-14, epsrel=1e-12, limit=200)
        T_tail = t_inner + tail

        if T_rich is not None:
            notes.append(f"richardson and tail estimates differ by {abs(T_tail - T_rich):.3e}")
        logger.info(f"{descriptor.name}: singular time {T_tail:.12g} at focal r={focal:.12g}")

        return SingularityReport(
            T=T_tail,
            T_richardson=T_rich,
            T_tail=T_tail,
            focal_r=focal,
            type=SingularityType.TYPE_I,
            notes=notes,
        )

    def _lambda_fit(self, traj: FlowTrajectory, T: float, window: float) -> Tuple[float, float]:
        count = max(self.settings.lambda_samples, self.settings.lambda_min_samples)
        taus = np.geomspace(window / 10.0, window, count)
        times = T - taus
        usable = times <= traj.t_end
        if usable.sum() < self.settings.lambda_min_samples:
            raise InconclusiveWindow(int(usable.sum()), self.settings.lambda_min_samples)
        taus = taus[usable]
        eps = np.atleast_1d(traj.epsilon_at(times[usable]))
        normA2 = np.array([traj.descriptor.normA2_of_r(float(e)) for e in eps])
        lam = taus * normA2
        slope, intercept = np.polyfit(taus, lam, 1)
        spread = float((lam.max() - lam.min()) / abs(lam.mean())) if lam.mean() != 0 else math.inf
        return float(intercept), spread

    def classify_singularity(self, traj: FlowTrajectory, report: SingularityReport) -> SingularityReport:
        """Estimate Lambda = lim (T - t)|A|^2 over the last decade before T"""
        if report.T is None:
            return report.model_copy(update={"type": SingularityType.NO_SINGULARITY})

        T = report.T
        window = self.settings.lambda_window * T
        Lambda, spread = self._lambda_fit(traj, T, window)
        Lambda_half, _ = self._lambda_fit(traj, T, window / 2.0)

        finite = math.isfinite(Lambda)
        stable = finite and abs(Lambda - Lambda_half) <= 0.01 * abs(Lambda)
        kind = SingularityType.TYPE_I if finite and spread < self.settings.lambda_spread else SingularityType.TYPE_II

        notes = list(report.notes)
        if not stable:
            notes.append("Lambda changes by more than 1% under window halving")
            logger.warning(f"{traj.descriptor.name}: Lambda {Lambda} vs {Lambda_half} on half window")

        logger.info(f"{traj.descriptor.name}: {kind.value}, Lambda={Lambda:.6g}, spread={spread:.3e}")
        return report.model_copy(update={
            "type": kind,
            "Lambda": Lambda,
            "Lambda_half_window": Lambda_half,
            "Lambda_spread": spread,
            "window_stable": stable,
            "notes": notes,
        })

    def bound_check(
        self,
        C_tilde: float,
        traj: FlowTrajectory,
        report: SingularityReport,
        slack: Optional[float] = None,
        time_scale: float = 1.0,
    ) -> BoundCheck:
        """Compare |A|^2 with slack * C~/(exp(2(T - t)) - 1) where |A|^2 >= max(|A|, C~)"""
        slack = slack if slack is not None else self.settings.bound_slack
        if C_tilde <= 0:
            return BoundCheck(ok=True, skipped=True, slack=slack, note="Skipped: C~ = 0 makes the bound degenerate")
        if report.T is None:
            return BoundCheck(ok=True, skipped=True, slack=slack, note="Skipped: no singular time")

        T = report.T
        tau_min = max(T - traj.t_end, 1e-12 * T)
        taus = np.geomspace(tau_min, T, 400)
        times = np.clip(T - taus, 0.0, traj.t_end)
        eps = np.atleast_1d(traj.epsilon_at(times))
        normA2 = np.array([traj.descriptor.normA2_of_r(float(e)) for e in eps])

        window = (normA2 >= np.sqrt(normA2)) & (normA2 >= C_tilde)
        if not window.any():
            return BoundCheck(ok=True, slack=slack, note="hypothesis window is empty")

        bound = slack * C_tilde / np.expm1(2.0 * taus[window] * time_scale)
        ratio = normA2[window] / bound
        worst = float(ratio.max())
        ok = bool(worst <= 1.0)
        if not ok:
            logger.warning(f"{traj.descriptor.name}: bound check flagged, worst ratio {worst:.3f}")
        return BoundCheck(ok=ok, window_count=int(window.sum()), worst_ratio=worst, slack=slack)

    def typeI_bound_check(
        self,
        C_tilde: float,
        traj: FlowTrajectory,
        report: SingularityReport,
        slack: Optional[float] = None,
        time_scale: float = 1.0,
    ) -> bool:
        return self.bound_check(C_tilde, traj, report, slack, time_scale).ok

    def default_t_max(self, family: FamilySolution) -> float:
        if family.singular_time is not None:
            return 2.0 * family.singular_time + 1.0
        return 10.0

    def run_family(
        self,
        family: FamilySolution,
        route: Route = Route.CATALOG,
        t_max: Optional[float] = None,
        C_tilde: Optional[float] = None,
        sample_count: int = 200,
    ) -> Tuple[FlowTrajectory, SingularityReport]:
        """Integrate, detect and classify in one call"""
        descriptor = self.descriptor(family, route)
        traj = self.integrate_flow(descriptor, t_max or self.default_t_max(family), sample_count=sample_count)
        try:
            report = self.detect_singularity(traj)
        except NoSingularity:
            return traj, SingularityReport(type=SingularityType.NO_SINGULARITY, notes=[f"status {traj.status.value}"])

        traj.T_est = report.T
        report = self.classify_singularity(traj, report)
        if C_tilde is not None:
            check = self.bound_check(C_tilde, traj, report)
            notes = list(report.notes)
            if check.note:
                notes.append(check.note)
            report = report.model_copy(update={"bound_ok": check.ok, "notes": notes})
        return traj, report
