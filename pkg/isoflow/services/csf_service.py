import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import spsolve
from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt

from isoflow.models.ambient import AmbientSpec
from isoflow.models.curve import (
    MIN_VERTICES,
    BumpMetric,
    CsfSettings,
    DiscreteCurve,
    ExperimentReport,
    ExperimentSample,
)
from isoflow.utils.config import Settings, get_settings
from isoflow.utils.errors import (
    DegenerateVertex,
    DistanceSolverFailure,
    ParameterViolation,
    StepRejected,
)
from isoflow.utils.validators import build_model

logger = logging.getLogger("isoflow.csf_service")

# Deviation threshold is max(FLOOR_FACTOR x flat floor, DEV_ABS_MIN)
FLOOR_FACTOR = 10.0
DEV_ABS_MIN = 1e-6

MIN_EDGE = 1e-14
DT_AREA_FACTOR = 0.01
SAMPLE_COLUMNS = ["t", "length", "area", "dev", "min_dist_to_bump"]


def _unit_rule(panels: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [0, 1]"""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def fit_circle(points: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """Algebraic least-squares circle (center, radius, max radial residual)"""
    x, y = points[:, 0], points[:, 1]
    M = np.column_stack([2.0 * x, 2.0 * y, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(M, x * x + y * y, rcond=None)
    center = coef[:2]
    radius = math.sqrt(coef[2] + center @ center)
    residual = float(np.max(np.abs(np.linalg.norm(points - center, axis=1) - radius)))
    return center, radius, residual


class GeodesicShooter:
    """Metric distance from chart points to a circle lying in the flat part of a bump metric.

    The bump metric is rotationally symmetric about p, so rho^2 psi' is
    conserved along unit-speed geodesics. A geodesic leaving y at metric
    angle alpha to the outward radial direction is then fixed by quadratures
    in u = sqrt(rho^2 - c^2). Once it leaves the sigma-ball it is a straight
    line. A shortest path to the circle meets it orthogonally, so its last
    straight piece lies on a line through the circle's center O.
    Shooting solves for alpha by bisection on the signed distance from O
    to that final line.
    """

    def __init__(
        self,
        metric: BumpMetric,
        center,
        radius: float,
        directions: int = 64,
        tol: float = 1e-8,
        chunk: int = 64,
    ):
        self.metric = metric
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.directions = directions
        self.tol = tol
        self.chunk = chunk
        self.p = metric.center
        self.sigma = metric.sigma
        self._nodes, self._weights = _unit_rule(panels=8, order=16)

    # quadratures in u, vectorised over c, ua, ub

    def _rule(self, ua: np.ndarray, ub: np.ndarray):
        width = (ub - ua)[:, None]
        return ua[:, None] + width * self._nodes[None, :], width * self._weights[None, :]

    def _turn(self, c: np.ndarray, ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
        """Change of polar angle psi while u runs from ua to ub"""
        ac = np.abs(c)
        base = np.arctan2(ub, ac) - np.arctan2(ua, ac)
        u, w = self._rule(ua, ub)
        rho = np.sqrt(ac[:, None] ** 2 + u ** 2)
        q = self.metric.radial_slope_quotient(rho)
        # (W - 1)/rho^2 = q^2 / (1 + W) stays finite at the center
        excess = q ** 2 / (1.0 + np.sqrt(1.0 + (rho * q) ** 2))
        return np.sign(c) * (base + ac * np.sum(w * excess, axis=1))

    def _arc(self, c: np.ndarray, ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
        """Metric length while u runs from ua to ub"""
        u, w = self._rule(ua, ub)
        rho = np.sqrt(c[:, None] ** 2 + u ** 2)
        return np.sum(w * self.metric.radial_stretch(rho), axis=1)

    def final_lines(self, y: np.ndarray, alpha: np.ndarray):
        """Exit point, exit direction and metric length inside for each (y, alpha)"""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        alpha = np.asarray(alpha, dtype=float)
        d = y - self.p
        rho0 = np.hypot(d[:, 0], d[:, 1])
        psi0 = np.arctan2(d[:, 1], d[:, 0])

        # at p itself every direction is radial
        at_center = rho0 < MIN_EDGE
        psi0 = np.where(at_center, psi0 + alpha, psi0)
        alpha = np.where(at_center, 0.0, alpha)

        sig = self.sigma
        c = rho0 * np.sin(alpha)
        outward = np.cos(alpha) >= 0
        u0 = rho0 * np.abs(np.cos(alpha))
        inside = rho0 < sig
        crosses = ~inside & ~outward & (np.abs(c) < sig)
        in_ball = inside | crosses

        usig = np.sqrt(np.maximum(sig ** 2 - c ** 2, 0.0))
        zero = np.zeros_like(c)
        through_center = np.where(c == 0, math.pi, 0.0)

        X = y.copy()
        direction = np.column_stack([np.cos(psi0 + alpha), np.sin(psi0 + alpha)])
        length = np.zeros_like(c)

        if np.any(in_ball):
            idx = np.nonzero(in_ball)[0]
            ci, u0i, usi = c[idx], u0[idx], usig[idx]
            zi = zero[idx]
            half_turn = self._turn(ci, zi, usi)
            half_arc = self._arc(ci, zi, usi)

            psi_exit = np.empty_like(ci)
            s = np.empty_like(ci)

            ins = inside[idx]
            out = outward[idx]

            # starts inside, moving outward
            a = ins & out
            if np.any(a):
                psi_exit[a] = psi0[idx][a] + self._turn(ci[a], u0i[a], usi[a])
                s[a] = self._arc(ci[a], u0i[a], usi[a])

            # starts inside, moving inward through the turning point rho = |c|
            b = ins & ~out
            if np.any(b):
                psi_exit[b] = (
                    psi0[idx][b]
                    + self._turn(ci[b], zi[b], u0i[b])
                    + half_turn[b]
                    + through_center[idx][b]
                )
                s[b] = self._arc(ci[b], zi[b], u0i[b]) + half_arc[b]

            # starts outside, enters and crosses the ball
            e = ~ins
            if np.any(e):
                ye = y[idx][e]
                ve = direction[idx][e]
                run = (u0i[e] - usi[e])[:, None]
                entry = ye + run * ve
                psi_in = np.arctan2(entry[:, 1] - self.p[1], entry[:, 0] - self.p[0])
                psi_exit[e] = psi_in + 2.0 * half_turn[e] + through_center[idx][e]
                s[e] = run[:, 0] + 2.0 * half_arc[e]

            beta = np.arcsin(np.clip(ci / sig, -1.0, 1.0))
            X[idx] = self.p + sig * np.column_stack([np.cos(psi_exit), np.sin(psi_exit)])
            direction[idx] = np.column_stack([np.cos(psi_exit + beta), np.sin(psi_exit + beta)])
            length[idx] = s

        return X, direction, length

    def _miss(self, X: np.ndarray, direction: np.ndarray):
        """Signed distance from O to each final line and the total length to the circle"""
        rel = X - self.center
        miss = direction[:, 0] * rel[:, 1] - direction[:, 1] * rel[:, 0]
        remaining = self.radius - np.einsum("ij,ij->i", rel, direction)
        return miss, remaining

    def radial_path_is_flat(self, points: np.ndarray) -> np.ndarray:
        """True where the radial segment from the point to the circle avoids the ball"""
        rel = points - self.center
        r = np.linalg.norm(rel, axis=1)
        outside = r >= self.radius
        unit = rel / np.where(r > 0, r, 1.0)[:, None]
        span = np.abs(self.radius - r)
        sign = np.where(outside, -1.0, 1.0)[:, None]
        step = np.clip(np.einsum("ij,ij->i", self.p - points, sign * unit), 0.0, span)
        closest = points + step[:, None] * sign * unit
        clear = np.linalg.norm(closest - self.p, axis=1) >= self.sigma
        return (clear & (r > 0)) | outside

    def distances(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(points - self.center, axis=1)
        # the metric dominates the flat one, so a flat radial path is shortest
        dist = np.abs(self.radius - r)
        if self.metric.is_flat:
            return dist

        todo = np.nonzero(~self.radial_path_is_flat(points))[0]
        for start in range(0, todo.size, self.chunk):
            rows = todo[start:start + self.chunk]
            dist[rows] = self._shoot(points[rows])
        return dist

    def _shoot(self, points: np.ndarray) -> np.ndarray:
        k, K = points.shape[0], self.directions
        step = 2.0 * math.pi / K
        grid = -math.pi + (np.arange(K) + 0.5) * step

        Y = np.repeat(points, K, axis=0)
        A = np.tile(grid, k)
        miss, _ = self._miss(*self.final_lines(Y, A)[:2])
        miss = miss.reshape(k, K)

        # brackets between cyclically adjacent directions
        nxt = np.roll(miss, -1, axis=1)
        rows, cols = np.nonzero(np.sign(miss) != np.sign(nxt))
        if rows.size == 0:
            raise DistanceSolverFailure(f"no orthogonal geodesic found from {points[0].tolist()}")

        lo = grid[cols]
        hi = lo + step
        f_lo = miss[rows, cols]
        Yb = points[rows]

        iterations = int(math.ceil(math.log2(step * max(self.radius, 1.0) / self.tol))) + 1
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            f_mid, _ = self._miss(*self.final_lines(Yb, mid)[:2])
            left = np.sign(f_mid) == np.sign(f_lo)
            lo = np.where(left, mid, lo)
            f_lo = np.where(left, f_mid, f_lo)
            hi = np.where(left, hi, mid)

        alpha = 0.5 * (lo + hi)
        X, direction, inner = self.final_lines(Yb, alpha)
        miss_root, remaining = self._miss(X, direction)
        total = inner + remaining

        # sign changes across a jump of the final line are not roots
        total = np.where(np.abs(miss_root) <= 1e3 * self.tol, total, np.inf)
        best = np.full(k, np.inf)
        np.minimum.at(best, rows, total)
        if not np.all(np.isfinite(best)):
            bad = int(np.nonzero(~np.isfinite(best))[0][0])
            logger.error(f"Geodesic shooting failed from {points[bad].tolist()}")
            raise DistanceSolverFailure(f"shooting did not converge from {points[bad].tolist()}")
        return best


class CsfService:
    """Service for the reference curve shortening flow on the bump-perturbed plane"""

    def __init__(self, settings: Optional[Settings] = None, csf: Optional[CsfSettings] = None):
        self.settings = settings or get_settings()
        self.csf = csf or CsfSettings()

    # Metric

    def bump_metric(self, p, h: float, sigma: float) -> BumpMetric:
        return build_model(BumpMetric, {"p": tuple(p), "h": h, "sigma": sigma}, family="BumpProduct")

    def bump_height(self, x, p, h: float, sigma: float) -> float:
        """h exp(-sigma^2/(sigma^2 - |x - p|^2)) inside the ball, 0 outside"""
        return float(self.bump_metric(p, h, sigma).height(np.asarray(x, dtype=float)))

    def induced_metric(self, x, metric: BumpMetric) -> np.ndarray:
        return metric.metric(np.asarray(x, dtype=float))

    # Discrete geometry

    def _lift(self, vertices: np.ndarray, metric: BumpMetric) -> np.ndarray:
        return vertices if metric.is_flat else metric.embed(vertices)

    def edge_lengths(self, vertices: np.ndarray, metric: BumpMetric) -> np.ndarray:
        """Chord lengths of the lifted polygon, edge i joins vertex i to i + 1"""
        P = self._lift(vertices, metric)
        lengths = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)
        short = np.nonzero(lengths <= MIN_EDGE)[0]
        if short.size:
            raise DegenerateVertex(int(short[0]))
        return lengths

    def geodesic_curvature(self, curve: DiscreteCurve, metric: BumpMetric, i: Optional[int] = None):
        """Turning-angle geodesic curvature of the lifted polygon, positive for a counter-clockwise circle.

        The discrete curvature vector 2 (T_i - T_{i-1}) / (l_{i-1} + l_i) is
        projected on the inward conormal n x tau of the graph surface.
        """
        x = curve.vertices
        lengths = self.edge_lengths(x, metric)
        P = metric.embed(x)
        T = (np.roll(P, -1, axis=0) - P) / lengths[:, None]
        T_prev = np.roll(T, 1, axis=0)
        l_prev = np.roll(lengths, 1)
        K = 2.0 * (T - T_prev) / (l_prev + lengths)[:, None]

        grad = metric.gradient(x)
        normal = np.column_stack([-grad, np.ones(len(x))])
        normal /= np.linalg.norm(normal, axis=1)[:, None]
        tau = T + T_prev
        tau -= np.einsum("ij,ij->i", tau, normal)[:, None] * normal
        tau /= np.linalg.norm(tau, axis=1)[:, None]
        conormal = np.cross(normal, tau)

        k_g = np.einsum("ij,ij->i", K, conormal)
        return k_g if i is None else float(k_g[i])

    def metric_length(self, curve: DiscreteCurve, metric: BumpMetric) -> float:
        return float(np.sum(self.edge_lengths(curve.vertices, metric)))

    def _area_potential(self, metric: BumpMetric, samples: int = 8001):
        """M(rho) = int_0^rho (W - 1) t dt, so div((x - p) M/rho^2) = W - 1"""
        rho = np.linspace(0.0, metric.sigma, samples)
        slope = metric.radial_slope(rho)
        excess = slope ** 2 / (1.0 + np.sqrt(1.0 + slope ** 2))
        M = cumulative_trapezoid(excess * rho, rho, initial=0.0)
        return CubicSpline(rho, M), float(M[-1])

    def metric_area(self, curve: DiscreteCurve, metric: BumpMetric, potential=None) -> float:
        """Enclosed metric area: chart area plus the flux of (x - p) M(rho)/rho^2"""
        area = curve.signed_area()
        if metric.is_flat:
            return area
        spline, total = potential or self._area_potential(metric)

        x = curve.vertices
        edge = curve.edges
        nodes, weights = np.polynomial.legendre.leggauss(4)
        tq = 0.5 * (nodes + 1.0)
        wq = 0.5 * weights
        pts = x[:, None, :] + tq[None, :, None] * edge[:, None, :]
        rel = pts - metric.center
        rho = np.linalg.norm(rel, axis=2)
        M = np.where(rho < metric.sigma, spline(np.minimum(rho, metric.sigma)), total)
        factor = np.where(rho > MIN_EDGE, M / np.where(rho > MIN_EDGE, rho, 1.0) ** 2, 0.0)
        F = rel * factor[..., None]
        flux = F[..., 0] * edge[:, None, 1] - F[..., 1] * edge[:, None, 0]
        return area + float(np.sum(flux * wq[None, :]))

    def min_dist_to_bump(self, curve: DiscreteCurve, metric: BumpMetric) -> float:
        """Smallest chart distance from a vertex to the sigma-ball, negative inside"""
        return float(np.min(np.linalg.norm(curve.vertices - metric.center, axis=1)) - metric.sigma)

    # Embeddedness

    def locally_embedded(self, vertices: np.ndarray) -> bool:
        """No folded corners and positive orientation"""
        edges = np.roll(vertices, -1, axis=0) - vertices
        turns = np.einsum("ij,ij->i", np.roll(edges, 1, axis=0), edges)
        x, y = vertices[:, 0], vertices[:, 1]
        area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        return bool(np.all(turns > 0) and area > 0)

    def embedded(self, vertices: np.ndarray) -> bool:
        """Full test of every pair of non-adjacent edges"""
        m = len(vertices)
        A = vertices
        B = np.roll(vertices, -1, axis=0)
        E = B - A

        def cross(u, v):
            return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

        d1 = cross(E[:, None, :], A[None, :, :] - A[:, None, :])
        d2 = cross(E[:, None, :], B[None, :, :] - A[:, None, :])
        d3 = cross(E[None, :, :], A[:, None, :] - A[None, :, :])
        d4 = cross(E[None, :, :], B[:, None, :] - A[None, :, :])
        hits = (d1 * d2 < 0) & (d3 * d4 < 0)

        i, j = np.indices((m, m))
        gap = np.abs(i - j)
        hits &= (gap > 1) & (gap < m - 1)
        return not bool(np.any(hits))

    # Time stepping

    def _laplacian(self, lengths: np.ndarray) -> sparse.csc_matrix:
        """Cyclic second difference in arclength over non-uniform edges"""
        m = len(lengths)
        l_prev = np.roll(lengths, 1)
        scale = 2.0 / (l_prev + lengths)
        up = scale / lengths
        down = scale / l_prev
        idx = np.arange(m)
        rows = np.concatenate([idx, idx, idx])
        cols = np.concatenate([idx, (idx + 1) % m, (idx - 1) % m])
        vals = np.concatenate([-(up + down), up, down])
        return sparse.csc_matrix((vals, (rows, cols)), shape=(m, m))

    def remesh(self, vertices: np.ndarray, metric: BumpMetric) -> np.ndarray:
        """Periodic spline resampling at equal metric arclength when spacing degrades"""
        lengths = self.edge_lengths(vertices, metric)
        m = len(vertices)
        chart_mean = float(np.mean(np.linalg.norm(np.roll(vertices, -1, axis=0) - vertices, axis=1)))

        target = m
        if chart_mean < self.csf.h_min and m // 2 >= MIN_VERTICES:
            target = m // 2
        if target == m and lengths.max() <= self.csf.max_spacing_ratio * lengths.min():
            return vertices

        s = np.concatenate([[0.0], np.cumsum(lengths)])
        closed = np.vstack([vertices, vertices[:1]])
        spline = CubicSpline(s, closed, bc_type="periodic")
        resampled = spline(np.linspace(0.0, s[-1], target, endpoint=False))
        if target != m:
            logger.debug(f"Remeshed {m} -> {target} vertices")
        return resampled

    def _forcing(self, x: np.ndarray, lengths: np.ndarray, metric: BumpMetric) -> np.ndarray:
        """Gamma(x_s, x_s) with centered metric-arclength tangents"""
        l_prev = np.roll(lengths, 1)
        xs = (np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)) / (l_prev + lengths)[:, None]
        return np.einsum("mkij,mi,mj->mk", metric.christoffel(x), xs, xs)

    def _solve(self, system: sparse.csc_matrix, rhs: np.ndarray, dt: float) -> np.ndarray:
        out = np.asarray(spsolve(system, rhs))
        if not np.all(np.isfinite(out)):
            raise StepRejected(dt, "non-finite vertices")
        return out

    def csf_step(
        self, curve: DiscreteCurve, metric: BumpMetric, dt: float, full_check: bool = True
    ) -> DiscreteCurve:
        """One step of x_t = x_ss + Gamma(x_s, x_s) in metric arclength.

        A backward Euler half step gives the midpoint geometry; the full step is
        Crank-Nicolson with the Laplacian and forcing frozen at that midpoint.
        """
        if dt <= 0:
            raise ParameterViolation(["dt must be positive"])
        x = curve.vertices
        eye = sparse.identity(len(x), format="csc")
        lengths = self.edge_lengths(x, metric)

        half = x.copy()
        if not metric.is_flat:
            half += 0.5 * dt * self._forcing(x, lengths, metric)
        half = self._solve(eye - 0.5 * dt * self._laplacian(lengths), half, dt)

        try:
            mid_lengths = self.edge_lengths(half, metric)
            L = self._laplacian(mid_lengths)
            rhs = x + 0.5 * dt * (L @ x)
            if not metric.is_flat:
                rhs += dt * self._forcing(half, mid_lengths, metric)
            moved = self._solve(eye - 0.5 * dt * L, rhs, dt)
            moved = self.remesh(moved, metric)
        except DegenerateVertex as e:
            raise StepRejected(dt, str(e)) from e

        if not self.locally_embedded(moved):
            raise StepRejected(dt, "folded corner or orientation flip")
        if full_check and not self.embedded(moved):
            raise StepRejected(dt, "self-intersection")
        return DiscreteCurve(vertices=moved)

    def advance(
        self, curve: DiscreteCurve, metric: BumpMetric, dt: float, full_check: bool = True
    ) -> Tuple[DiscreteCurve, float]:
        """csf_step with dt halved on every rejection; returns the curve and the dt used"""
        retrying = Retrying(
            retry=retry_if_exception_type(StepRejected),
            stop=stop_after_attempt(self.csf.max_attempts),
            before_sleep=before_sleep_log(logger, logging.WARNING),
            reraise=True,
        )
        for attempt in retrying:
            with attempt:
                step = dt / 2 ** (attempt.retry_state.attempt_number - 1)
                return self.csf_step(curve, metric, step, full_check=full_check), step
        raise StepRejected(dt, "no attempt made")

    def default_dt(self, radius: float, vertices: int) -> float:
        spacing = 2.0 * radius * math.sin(math.pi / vertices)
        return spacing ** 2

    # Parallel deviation

    def shooter(self, curve_0: DiscreteCurve, metric: BumpMetric) -> GeodesicShooter:
        center, radius, residual = fit_circle(curve_0.vertices)
        if residual > 1e-8 * radius:
            raise ParameterViolation([f"curve_0 must be a circle (radial residual {residual:.3e})"])
        if not metric.is_flat and np.linalg.norm(metric.center - center) + metric.sigma >= radius:
            raise ParameterViolation(["the bump ball must lie inside curve_0"])
        return GeodesicShooter(metric, center, radius)

    def parallel_deviation(
        self,
        curve_t: DiscreteCurve,
        curve_0: DiscreteCurve,
        metric: BumpMetric,
        shooter: Optional[GeodesicShooter] = None,
    ) -> Tuple[float, float]:
        """(max - min, mean) of the metric distances from curve_t's vertices to curve_0"""
        shooter = shooter or self.shooter(curve_0, metric)
        dist = shooter.distances(curve_t.vertices)
        return float(dist.max() - dist.min()), float(dist.mean())

    # Experiment

    def _evolve(
        self,
        metric: BumpMetric,
        O: Tuple[float, float],
        R: float,
        vertices: int,
        dt: float,
        threshold: Optional[float],
    ):
        curve_0 = DiscreteCurve.circle(O, R, vertices)
        shooter = self.shooter(curve_0, metric)
        potential = None if metric.is_flat else self._area_potential(metric)
        area_0 = self.metric_area(curve_0, metric, potential)

        curve = curve_0
        t = 0.0
        samples: List[ExperimentSample] = []
        t_star = None
        since_star = 0
        notes = []

        for step in range(self.csf.max_steps + 1):
            area = self.metric_area(curve, metric, potential)
            stopping = area < self.csf.stop_area_fraction * area_0
            if step % self.csf.sample_every == 0 or stopping:
                dev = math.nan
                if t_star is None or since_star % self.csf.dev_every == 0:
                    dev, _ = self.parallel_deviation(curve, curve_0, metric, shooter)
                if t_star is not None:
                    since_star += 1
                samples.append(
                    ExperimentSample(
                        t=t,
                        length=self.metric_length(curve, metric),
                        area=area,
                        dev=dev,
                        min_dist_to_bump=self.min_dist_to_bump(curve, metric),
                    )
                )
                if threshold is not None and t_star is None and dev > threshold:
                    t_star = t
                    since_star = 1
                    logger.info(f"Deviation {dev:.3e} above threshold {threshold:.3e} at t*={t:.6f}")
            if stopping:
                break
            if step == self.csf.max_steps:
                notes.append(f"stopped after {step} steps")
                break

            # dt/r^2 stays below DT_AREA_FACTOR as the curve shrinks
            step_dt = min(dt, DT_AREA_FACTOR * area / math.pi)
            full = (step + 1) % self.csf.embedding_check_every == 0
            try:
                curve, used = self.advance(curve, metric, step_dt, full_check=full)
            except StepRejected as e:
                logger.error(f"Step rejected at t={t:.6f} after {self.csf.max_attempts} attempts: {e}")
                raise
            t += used

        return samples, t_star, t, notes

    def _monotone(self, values: np.ndarray, scale: float) -> bool:
        return bool(np.all(np.diff(values) <= 1e-9 * scale))

    def flat_floor(self, O, R: float, vertices: int, dt: float) -> float:
        """Largest deviation of the flat control run at the same resolution"""
        flat = self.bump_metric(O, 0.0, 1.0)
        samples, _, _, _ = self._evolve(flat, O, R, vertices, dt, threshold=None)
        devs = np.array([s.dev for s in samples])
        return float(np.nanmax(devs))

    def run_bump_experiment(
        self,
        p,
        h: float,
        sigma: float,
        R: float,
        O=(0.0, 0.0),
        vertices: Optional[int] = None,
        dt: Optional[float] = None,
        floor: Optional[float] = None,
    ) -> ExperimentReport:
        """Evolve the circle |x - O| = R and record when it stops moving by parallels"""
        build_model(
            AmbientSpec,
            {"family": "BumpProduct", "p": tuple(p), "h": h, "sigma": sigma, "R": R, "O": tuple(O)},
        )
        metric = self.bump_metric(p, h, sigma)
        m = vertices or self.csf.vertices
        dt = dt or self.csf.dt or self.default_dt(R, m)

        if floor is None:
            floor = self.flat_floor(tuple(O), R, m, dt)
            logger.info(f"Flat floor at {m} vertices: {floor:.3e}")
        threshold = max(FLOOR_FACTOR * floor, DEV_ABS_MIN)

        logger.info(f"Bump experiment p={tuple(p)} h={h} sigma={sigma} R={R} O={tuple(O)} m={m} dt={dt:.3e}")
        samples, t_star, t_end, notes = self._evolve(metric, tuple(O), R, m, dt, threshold)

        t = np.array([s.t for s in samples])
        area = np.array([s.area for s in samples])
        length = np.array([s.length for s in samples])

        extinction = None
        if len(samples) >= 2 and t[-1] > t[-2]:
            rate = (area[-1] - area[-2]) / (t[-1] - t[-2])
            if rate < 0:
                extinction = float(t[-1] - area[-1] / rate)
        if t_star is None:
            notes.append("no t* found")

        report = ExperimentReport(
            p=tuple(p),
            h=h,
            sigma=sigma,
            R=R,
            O=tuple(O),
            vertices=m,
            dt=dt,
            floor=floor,
            threshold=threshold,
            t_star=t_star,
            extinction_estimate=extinction,
            t_end=t_end,
            samples=samples,
            area_monotone=self._monotone(area, area[0]),
            length_monotone=self._monotone(length, length[0]),
            notes=notes,
        )
        if t_star is not None and not report.before_extinction:
            logger.warning(f"t*={t_star} is not before the extinction estimate {extinction}")
        return report

    def sample_rows(self, report: ExperimentReport):
        for s in report.samples:
            yield [s.t, s.length, s.area, s.dev, s.min_dist_to_bump]
