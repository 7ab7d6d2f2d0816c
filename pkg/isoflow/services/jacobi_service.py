import logging
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import bisect

from isoflow.models.jacobi import JacobiState, ParallelGeometry, ShapeOperator, geometry_arrays
from isoflow.utils.config import Settings, get_settings
from isoflow.utils.errors import (
    DegenerateDelta,
    FocalPoint,
    InsufficientSamples,
    ParameterViolation,
    StepSizeUnderflow,
)
from isoflow.utils.gtrig import c_delta, cosine_quotient, s_delta

logger = logging.getLogger("isoflow.jacobi_service")

DSource = Union[Callable[[float], JacobiState], "JacobiPropagator", np.ndarray]

# |det D| at a bisected focal root, relative to det_scale
FOCAL_CONFIRM = 1e-6


def det_scale(D: np.ndarray) -> float:
    """Scale for |det D| thresholds: 1 at D(0) = I, ||D||^n once D has grown"""
    return max(1.0, float(np.linalg.norm(D, 2))) ** D.shape[0]


class JacobiPropagator:
    """Dense-output solution of D'' + 2 omega D' + (omega^2 + R) D = 0 on [0, r_end].

    omega is the rotation of a non-parallel frame (zero for parallel frames).
    D(0) = I and D'(0) = -A_0 - omega.
    """

    def __init__(
        self,
        R_bar: np.ndarray,
        A0: ShapeOperator,
        r_end: float,
        rtol: float = 1e-11,
        atol: float = 1e-12,
        rotation: Optional[np.ndarray] = None,
    ):
        self.n = A0.n
        self.R_bar = np.asarray(R_bar, dtype=float)
        self.A0 = A0
        self.r_end = float(r_end)
        self.rotation = np.zeros((self.n, self.n)) if rotation is None else np.asarray(rotation, dtype=float)
        if self.R_bar.shape != (self.n, self.n):
            raise ParameterViolation([f"curvature operator shape {self.R_bar.shape} does not match n={self.n}"])

        self._solution = None
        if self.r_end != 0.0:
            self._solution = self._integrate(rtol, atol)

    def _integrate(self, rtol: float, atol: float):
        n = self.n
        omega = self.rotation
        stiffness = omega @ omega + self.R_bar

        def rhs(r, y):
            D = y[: n * n].reshape(n, n)
            Dp = y[n * n:].reshape(n, n)
            Dpp = -2.0 * omega @ Dp - stiffness @ D
            return np.concatenate([Dp.ravel(), Dpp.ravel()])

        y0 = np.concatenate([np.eye(n).ravel(), (-self.A0.matrix - omega).ravel()])
        sol = solve_ivp(
            rhs, (0.0, self.r_end), y0, method="DOP853", rtol=rtol, atol=atol, dense_output=True
        )
        if sol.status == -1:
            logger.error(f"Jacobi propagation stalled at r={sol.t[-1]}: {sol.message}")
            raise StepSizeUnderflow(sol.message, last_time=float(sol.t[-1]))
        return sol

    def states(self, rs: Sequence[float]):
        """D and D' at every r, shapes (k, n, n)"""
        rs = np.atleast_1d(np.asarray(rs, dtype=float))
        n = self.n
        lo, hi = sorted((0.0, self.r_end))
        if np.any(rs < lo - 1e-12) or np.any(rs > hi + 1e-12):
            raise ParameterViolation([f"r outside the propagated window [{lo}, {hi}]"])
        if self._solution is None:
            D = np.broadcast_to(np.eye(n), (rs.size, n, n)).copy()
            Dp = np.broadcast_to(-self.A0.matrix - self.rotation, (rs.size, n, n)).copy()
            return D, Dp
        y = self._solution.sol(rs)
        D = y[: n * n].T.reshape(-1, n, n)
        Dp = y[n * n:].T.reshape(-1, n, n)
        return D, Dp

    def state_at(self, r: float) -> JacobiState:
        D, Dp = self.states([r])
        return JacobiState(r=float(r), D=D[0], Dprime=Dp[0])

    def __call__(self, r: float) -> JacobiState:
        return self.state_at(r)


class JacobiService:
    """Service for Jacobi endomorphism propagation and parallel geometry"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def propagator(
        self,
        R_bar: np.ndarray,
        A0: ShapeOperator,
        r_end: float,
        rotation: Optional[np.ndarray] = None,
    ) -> JacobiPropagator:
        return JacobiPropagator(
            R_bar, A0, r_end, rtol=self.settings.rtol, atol=self.settings.atol, rotation=rotation
        )

    def propagate_numeric(
        self,
        R_bar: np.ndarray,
        A0: ShapeOperator,
        r: float,
        rtol: Optional[float] = None,
        atol: Optional[float] = None,
    ) -> JacobiState:
        """Integrate D'' + R D = 0 from (I, -A_0) to r"""
        if r < 0:
            raise ParameterViolation(["r must be non-negative"])
        propagator = JacobiPropagator(
            R_bar, A0, r, rtol=rtol or self.settings.rtol, atol=atol or self.settings.atol
        )
        return propagator.state_at(r)

    def closed_form_D_spaceform(self, c: float, A0: ShapeOperator, r: float) -> JacobiState:
        """D(r) = c_{-c}(r) I - s_{-c}(r) A_0 in constant curvature c"""
        delta = -c
        eye = np.eye(A0.n)
        s = s_delta(delta, r)
        co = c_delta(delta, r)
        D = co * eye - s * A0.matrix
        Dp = delta * s * eye - co * A0.matrix
        return JacobiState(r=float(r), D=D, Dprime=Dp)

    def closed_form_D_ektau(self, kappa: float, tau: float, H: float, nu: float, r: float) -> JacobiState:
        """Closed-form D(r) of an isoparametric surface in E(kappa, tau)"""
        if kappa - 4 * tau ** 2 == 0:
            raise DegenerateDelta(["kappa - 4 tau^2 must be nonzero"], family="EkTau")
        delta = (kappa - 4 * tau ** 2) * nu ** 2 - kappa
        s = s_delta(delta, r)
        co = c_delta(delta, r)

        # (c_delta - 1)/delta has a removable singularity at delta = 0
        f = 2 * tau * s - 4 * tau * H * cosine_quotient(delta, r)
        g = co - 2 * H * s
        fp = 2 * tau * g
        gp = delta * s - 2 * H * co

        D = np.array([[1.0, f], [0.0, g]])
        Dp = np.array([[0.0, fp], [0.0, gp]])
        return JacobiState(r=float(r), D=D, Dprime=Dp)

    def parallel_geometry(
        self, state: JacobiState, n: int, rotation: Optional[np.ndarray] = None
    ) -> ParallelGeometry:
        """A = -D'D^-1 (minus the frame rotation), H = trace(A)/n"""
        det = state.det
        if abs(det) < self.settings.focal_threshold * det_scale(state.D):
            raise FocalPoint(state.r, det)

        # X = D' D^-1 solves D^T X^T = D'^T
        X = np.linalg.solve(state.D.T, state.Dprime.T).T
        A = -X
        if rotation is not None:
            A = A - rotation
        A = 0.5 * (A + A.T)
        eigs = np.linalg.eigvalsh(A)
        return ParallelGeometry(
            r=state.r,
            H=float(-np.trace(X) / n),
            A=A,
            detD=det,
            normA2=float(np.sum(eigs ** 2)),
        )

    def sample_geometry(
        self,
        source: DSource,
        rs: Sequence[float],
        n: int,
        rotation: Optional[np.ndarray] = None,
    ) -> List[ParallelGeometry]:
        """Parallel geometry at every r of rs"""
        if isinstance(source, JacobiPropagator):
            D, Dp = source.states(rs)
            rotation = source.rotation if rotation is None else rotation
            states = [JacobiState(r=float(r), D=D[i], Dprime=Dp[i]) for i, r in enumerate(rs)]
        else:
            states = [source(float(r)) for r in rs]
        return [self.parallel_geometry(state, n, rotation) for state in states]

    def _smallest_real_eigenvalue(self, D: np.ndarray) -> float:
        eigs = np.linalg.eigvals(D)
        real = eigs[np.abs(eigs.imag) <= 1e-9 * (1.0 + np.abs(eigs.real))].real
        # A complex pair cannot reach zero without first turning real
        return float(real.min()) if real.size else 1.0

    def focal_radius(
        self,
        source: DSource,
        A0: Optional[ShapeOperator] = None,
        window: float = 10.0,
        direction: int = 1,
    ) -> Optional[float]:
        """Distance to the first focal point along direction, or None inside window.

        source is a propagator, a callable r -> JacobiState, or a constant
        curvature operator (then A0 is required).
        """
        if direction not in (1, -1):
            raise ParameterViolation(["direction must be +1 or -1"])
        if isinstance(source, np.ndarray):
            if A0 is None:
                raise ParameterViolation(["A0 is required with a curvature operator"])
            source = self.propagator(source, A0, direction * window)
        elif isinstance(source, JacobiPropagator) and abs(source.r_end) < window:
            window = abs(source.r_end)

        def indicator(distance: float) -> float:
            return self._smallest_real_eigenvalue(source(direction * distance).D)

        steps = self.settings.focal_window_steps
        grid = window * np.arange(1, steps + 1) / steps
        if isinstance(source, JacobiPropagator):
            D, _ = source.states(direction * grid)
            values = np.array([self._smallest_real_eigenvalue(M) for M in D])
        else:
            values = np.array([indicator(d) for d in grid])

        previous = 0.0
        for i, distance in enumerate(grid):
            value = values[i]
            if value > 0:
                previous = distance
                continue
            if value == 0:
                root = float(distance)
            else:
                root = float(bisect(indicator, previous, distance, xtol=self.settings.focal_bisect_tol))
            state = source(direction * root)
            det = state.det
            if abs(det) > FOCAL_CONFIRM * det_scale(state.D):
                logger.warning(f"Eigenvalue sign change at r={root} without singular D (det={det:.3e})")
                previous = distance
                continue
            logger.debug(f"Focal radius {root} (direction {direction:+d}, det D={det:.3e})")
            return root

        return None

    def riccati_residual(self, samples: List[ParallelGeometry], ricci: float) -> float:
        """Max |(nH)' - Ric - |A|^2| over interior samples.

        Uses the summed mean curvature nH, the convention in which the identity
        holds for the space-form closed forms.
        """
        if len(samples) < 3:
            raise InsufficientSamples(f"need at least 3 samples, got {len(samples)}")
        r, H, normA2 = geometry_arrays(samples)
        n = samples[0].n
        steps = np.diff(r)
        h = steps[0]
        if h == 0 or not np.allclose(steps, h, rtol=1e-6, atol=0.0):
            raise InsufficientSamples("samples must be uniformly spaced in r")

        f = n * H
        if len(samples) >= 5:
            deriv = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
            interior = slice(2, -2)
        else:
            deriv = (f[2:] - f[:-2]) / (2 * h)
            interior = slice(1, -1)

        residual = np.abs(deriv - ricci - normA2[interior])
        return float(residual.max())
