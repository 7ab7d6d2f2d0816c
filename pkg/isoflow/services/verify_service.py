import logging
import math
import time
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from isoflow.models.catalog import FamilySolution, PairModel, Provenance, TangentClass
from isoflow.models.flow import FlowTrajectory, Route, SingularityReport, SingularityType
from isoflow.models.scenario import Check, CheckStatus, ScenarioKind, ScenarioResult
from isoflow.services.ambient_service import AmbientService
from isoflow.services.catalog_service import CatalogService
from isoflow.services.csf_service import CsfService
from isoflow.services.flow_service import FlowService, evo_eq_rhs, normA2_derivative_r, tangent_contraction
from isoflow.services.jacobi_service import JacobiService
from isoflow.utils.config import Settings, get_settings
from isoflow.utils.errors import FocalPoint, InconclusiveWindow, IsoFlowError

logger = logging.getLogger("isoflow.verify_service")

DEFAULT_TOLERANCES = {
    "analytic": 1e-7,
    "helicoid": 1e-9,
    "singular_time": 1e-6,
    "jacobi": 1e-8,
    "riccati": 1e-6,
    "eigenvalues": 1e-10,
    "lambda": 0.01,
    "shrinking_circle": 1e-3,
    "resolution": 0.1,
    "evolution": 1e-5,
}

RICCATI_STEP = 1e-3
# central difference step of d|A|^2/dt, relative to the checked horizon
EVOLUTION_STEP = 1e-4

# Families checked by CatalogVerify when a scenario names none
DEFAULT_CATALOG: List[Tuple[str, Dict[str, float]]] = [
    ("EkTauParabolicHelicoid", {"kappa": -1.0, "tau": 0.2, "H": 0.3}),
    ("EkTauVerticalCylinder", {"kappa": 1.0, "tau": 0.3, "k_g": 1.0}),
    ("EkTauVerticalCylinder", {"kappa": -1.0, "tau": 0.2, "k_g": 2.0}),
    ("EkTauVerticalCylinder", {"kappa": 0.5, "tau": 0.5, "k_g": -1.5}),
    ("EkTauHorizontalSlice", {"kappa": 1.0}),
    ("S2xR2Slice", {}),
    ("S2xS1", {"b": 1.0}),
    ("S1xR2", {"phi_a": 1.0}),
    ("S1xS2", {"phi_a": 0.7}),
    ("S2xS2", {"s": 0.5}),
    ("S2xS2", {"s": -0.3}),
    ("H2xH2", {"s": 2.0}),
    ("SpaceFormSphere", {"c": 1.0, "n": 3, "R0": 1.0}),
    ("SpaceFormSphere", {"c": 0.0, "n": 2, "R0": 1.0}),
    ("SpaceFormSphere", {"c": -1.0, "n": 2, "R0": 1.0}),
    ("SpaceFormClifford", {"n1": 1, "n2": 2, "theta": 0.6}),
]

SHAPE_CLASSES = [TangentClass.W_W, TangentClass.W_MINUS_W, TangentClass.COMPLEMENT]

# Headline bump configuration: off-center bump, |p - O| = 0.5
HEADLINE_BUMP = {"p": (0.5, 0.0), "h": 1.0, "sigma": 0.5, "R": 2.0, "O": (0.0, 0.0)}


def _provenance(family: FamilySolution, *keys: str) -> Optional[Provenance]:
    for key in keys:
        if key in family.provenance:
            return family.provenance[key]
    return None


def _worst(checks: Sequence[Check]) -> Optional[float]:
    values = [c.value for c in checks if c.value is not None and math.isfinite(c.value)]
    return max(values) if values else None


class VerifyService:
    """Service for analytic-vs-numeric verification and the acceptance self-test"""

    def __init__(
        self,
        ambient_service: AmbientService,
        jacobi_service: JacobiService,
        catalog_service: CatalogService,
        flow_service: FlowService,
        csf_service: CsfService,
        settings: Optional[Settings] = None,
    ):
        self.ambient = ambient_service
        self.jacobi = jacobi_service
        self.catalog = catalog_service
        self.flow = flow_service
        self.csf = csf_service
        self.settings = settings or get_settings()

    @classmethod
    def create(cls, settings: Optional[Settings] = None) -> "VerifyService":
        """Wire every service from one settings object"""
        settings = settings or get_settings()
        ambient = AmbientService(settings)
        jacobi = JacobiService(settings)
        catalog = CatalogService(ambient, jacobi)
        flow = FlowService(jacobi, settings)
        csf = CsfService(settings)
        return cls(ambient, jacobi, catalog, flow, csf, settings)

    def tolerances(self, overrides: Optional[Dict[str, float]] = None) -> Dict[str, float]:
        tol = dict(DEFAULT_TOLERANCES)
        if overrides:
            tol.update({k: float(v) for k, v in overrides.items() if k in tol})
        return tol

    # Per-family checks

    def probe_range(self, family: FamilySolution, fraction: float, default: float = 1.0) -> float:
        """Signed end of the r window, a fraction of the focal distance"""
        if family.focal_r is not None:
            return fraction * family.focal_r
        sign = -1.0 if family.H0 < 0 else 1.0
        return sign * default

    def geometry_samples(self, family: FamilySolution, rs: np.ndarray):
        _, geometry = self.flow.jacobi_sources(family, float(rs[-1]))
        if geometry is None:
            return None
        return [geometry(float(r)) for r in rs]

    def check_jacobi(self, family: FamilySolution, points: int = 60, tol: Optional[float] = None) -> Check:
        """Jacobi-route H(r) against the catalog H(r) on [0, 0.9 focal]"""
        tol = tol if tol is not None else DEFAULT_TOLERANCES["jacobi"]
        r_end = self.probe_range(family, 0.9)
        rs = np.linspace(0.0, r_end, points)
        try:
            samples = self.geometry_samples(family, rs)
        except FocalPoint as e:
            return Check(name="jacobi_vs_catalog", family=family.family_id, status=CheckStatus.FAILED, note=str(e))
        if samples is None:
            return Check(
                name="jacobi_vs_catalog", family=family.family_id, status=CheckStatus.SKIPPED,
                note="family has no Jacobi data",
            )

        diffs = [abs(g.H - family.H_of_r(float(r))) / max(1.0, abs(g.H)) for g, r in zip(samples, rs)]
        return Check.compare(
            "jacobi_vs_catalog", float(max(diffs)), tol,
            family=family.family_id, provenance=_provenance(family, "H_of_r", "eigenvalues"),
            note=f"r in [0, {r_end:.6g}]",
        )

    def check_riccati(self, family: FamilySolution, tol: Optional[float] = None) -> Check:
        """(nH)' = Ric(N, N) + |A|^2 along the parallels at step 1e-3"""
        tol = tol if tol is not None else DEFAULT_TOLERANCES["riccati"]
        r_end = self.probe_range(family, 0.5, default=0.5)
        count = max(int(round(abs(r_end) / RICCATI_STEP)), 4) + 1
        rs = np.sign(r_end) * RICCATI_STEP * np.arange(count)
        try:
            samples = self.geometry_samples(family, rs)
        except FocalPoint as e:
            return Check(name="riccati", family=family.family_id, status=CheckStatus.FAILED, note=str(e))
        if samples is None:
            return Check(name="riccati", family=family.family_id, status=CheckStatus.SKIPPED, note="no Jacobi data")

        residual = self.jacobi.riccati_residual(samples, family.ricci_normal)
        return Check.compare(
            "riccati", residual, tol, family=family.family_id, provenance=Provenance.DERIVED,
            note="summed mean curvature convention",
        )

    def check_flow(
        self,
        family: FamilySolution,
        traj: FlowTrajectory,
        report: SingularityReport,
        tolerances: Optional[Dict[str, float]] = None,
    ) -> List[Check]:
        """Analytic solution, singular time, classification and the curvature bound"""
        tol = self.tolerances(tolerances)
        name = family.family_id
        checks = []

        T = report.T
        t_limit = 0.99 * T if T is not None else traj.t_end
        usable = [s for s in traj.samples if s.t <= t_limit]

        if family.epsilon_of_t is not None:
            error = max(abs(s.epsilon - family.epsilon_of_t(s.t)) for s in usable)
            checks.append(Check.compare(
                "epsilon_analytic", error, tol["analytic"], family=name,
                provenance=_provenance(family, "epsilon", "implicit", "H_of_r"),
            ))
        if family.implicit_relation is not None:
            error = max(abs(family.implicit_relation(s.epsilon, s.t)) for s in usable)
            checks.append(Check.compare(
                "implicit_relation", error, tol["analytic"], family=name,
                provenance=_provenance(family, "implicit", "epsilon"),
            ))

        if family.singular_time is not None:
            if T is None:
                checks.append(Check(
                    name="singular_time", family=name, status=CheckStatus.FAILED,
                    note=f"no singularity detected, flow ended with {traj.status.value}",
                ))
            else:
                checks.append(Check.compare(
                    "singular_time", abs(T - family.singular_time), tol["singular_time"], family=name,
                    provenance=_provenance(family, "singular_time"),
                    note=f"T={T!r}, closed form {family.singular_time!r}",
                ))

        printed = family.notes.get("printed_singular_time")
        if printed is not None and T is not None:
            mismatch = abs(printed - T)
            status = CheckStatus.PASSED if mismatch <= tol["singular_time"] else CheckStatus.FLAGGED
            if status == CheckStatus.FLAGGED:
                logger.warning(f"{name}: printed singular time {printed!r} differs from T={T!r}")
            checks.append(Check(
                name="printed_singular_time", family=name, status=status, value=mismatch,
                tolerance=tol["singular_time"], provenance=Provenance.PAPER,
                note="reported, not asserted",
            ))

        checks.extend(self._evolution_checks(family, traj, T, tol))

        if T is not None:
            checks.append(self._type_one_check(name, report))
            checks.append(self._bound_check(family, traj, report))
        return checks

    def _evolution_checks(
        self, family: FamilySolution, traj: FlowTrajectory, T: Optional[float], tol: Dict[str, float]
    ) -> List[Check]:
        """Measured d|A|^2/dt against the Riccati identity and, for parallel A, the evolution equation"""
        model = family.curvature_model
        if model is None or traj.epsilon_at is None:
            return []
        horizon = 0.5 * (T if T is not None else traj.t_end)
        h = EVOLUTION_STEP * horizon
        times = [s.t for s in traj.samples if 2.0 * h <= s.t <= horizon]
        if not times:
            return []

        eps_end = traj.epsilon_at(horizon)
        r_end = 1.05 * eps_end if abs(eps_end) > 1e-12 else (-1.0 if family.H0 < 0 else 1.0)
        _, geometry = self.flow.jacobi_sources(family, r_end)

        def normA2(eps: float) -> float:
            return float(np.sum(np.square(family.eigenvalues_of_r(eps))))

        rate_error = 0.0
        equation_error = 0.0
        for t in times:
            eps = traj.epsilon_at(t)
            measured = (normA2(traj.epsilon_at(t + h)) - normA2(traj.epsilon_at(t - h))) / (2.0 * h)
            A = geometry(eps).A
            scale = max(1.0, abs(measured))
            predicted = family.H_of_r(eps) * normA2_derivative_r(A, family.R_bar)
            rate_error = max(rate_error, abs(measured - predicted) / scale)
            if family.parallel_A:
                reaction = evo_eq_rhs(normA2(eps), family.ricci_normal, tangent_contraction(A, model)) / family.n
                equation_error = max(equation_error, abs(measured - reaction) / scale)

        note = f"{len(times)} times up to t={horizon:.6g}"
        checks = [Check.compare(
            "evolution_rate", rate_error, tol["evolution"], family=family.family_id,
            provenance=Provenance.DERIVED, note=note,
        )]
        if family.parallel_A:
            checks.append(Check.compare(
                "evolution_equation", equation_error, tol["evolution"], family=family.family_id,
                provenance=Provenance.DERIVED, note=note,
            ))
        return checks

    def _type_one_check(self, name: str, report: SingularityReport) -> Check:
        finite = report.Lambda is not None and math.isfinite(report.Lambda)
        ok = report.type == SingularityType.TYPE_I and finite and bool(report.window_stable)
        return Check(
            name="type_I",
            family=name,
            status=CheckStatus.PASSED if ok else CheckStatus.FAILED,
            value=report.Lambda,
            provenance=Provenance.DERIVED,
            note=f"{report.type.value}, window stable: {report.window_stable}",
        )

    def _bound_check(self, family: FamilySolution, traj: FlowTrajectory, report: SingularityReport) -> Check:
        C_tilde = self.ambient.ambient_bounds(family.space).C_tilde
        # The bound is stated in summed mean curvature time
        bound = self.flow.bound_check(C_tilde, traj, report, time_scale=1.0 / family.n)
        if bound.skipped:
            status = CheckStatus.SKIPPED
        else:
            status = CheckStatus.PASSED if bound.ok else CheckStatus.FLAGGED
        return Check(
            name="curvature_bound",
            family=family.family_id,
            status=status,
            value=bound.worst_ratio,
            tolerance=1.0,
            provenance=Provenance.PAPER,
            note=bound.note or f"C~={C_tilde:.6g}, slack {bound.slack}",
        )

    def verify_family(
        self,
        family: FamilySolution,
        route: Route = Route.CATALOG,
        t_max: Optional[float] = None,
        tolerances: Optional[Dict[str, float]] = None,
        sample_count: int = 200,
    ) -> Tuple[List[Check], Optional[FlowTrajectory], Optional[SingularityReport]]:
        """Every check that applies to one family"""
        tol = self.tolerances(tolerances)
        checks = [self.check_jacobi(family, tol=tol["jacobi"]), self.check_riccati(family, tol=tol["riccati"])]
        try:
            traj, report = self.flow.run_family(family, route, t_max=t_max, sample_count=sample_count)
        except InconclusiveWindow as e:
            logger.error(f"{family.family_id}: {e}")
            checks.append(Check(name="type_I", family=family.family_id, status=CheckStatus.FAILED, note=str(e)))
            return checks, None, None

        checks += self.check_flow(family, traj, report, tolerances)
        return checks, traj, report

    def verify_catalog(
        self,
        families: Optional[Sequence[Tuple[str, Dict[str, float]]]] = None,
        tolerances: Optional[Dict[str, float]] = None,
    ) -> List[Check]:
        checks = []
        for name, params in families or DEFAULT_CATALOG:
            family = self.catalog.build(name, params)
            family_checks, _, _ = self.verify_family(family, tolerances=tolerances)
            checks += family_checks
        failed = [c for c in checks if c.failed]
        logger.info(f"Catalog verification: {len(checks)} checks, {len(failed)} failed")
        return checks

    # Acceptance self-test

    def _criterion(self, number: int, kind: ScenarioKind, description: str, checks: List[Check], **details):
        result = ScenarioResult(
            id=f"criterion-{number}",
            kind=kind,
            checks=checks,
            details={"description": description, "worst": _worst(checks), **details},
        )
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, f"Criterion {number}: {'passed' if result.passed else 'FAILED'} ({description})")
        return result

    def criterion_helicoid(self, rng: np.random.Generator, count: int = 20) -> ScenarioResult:
        checks = []
        for _ in range(count):
            kappa = rng.uniform(-4.0, -0.5)
            tau = rng.uniform(-1.0, 1.0)
            if abs(kappa - 4 * tau * tau) < 0.05:
                tau = 0.0
            H = rng.uniform(-0.9, 0.9) * math.sqrt(-kappa) / 2.0
            family = self.catalog.ektau_parabolic_helicoid(kappa, tau, H)
            traj, _ = self.flow.run_family(family, t_max=10.0)
            error = max(abs(s.epsilon - H * s.t) for s in traj.samples)
            checks.append(Check.compare(
                "epsilon_equals_Ht", error, DEFAULT_TOLERANCES["helicoid"],
                family=family.family_id, provenance=_provenance(family, "epsilon"),
            ))
        return self._criterion(1, ScenarioKind.FLOW_RUN, "parabolic helicoid epsilon = H t", checks)

    def criterion_s2s1(self, radii: Sequence[float] = (0.5, 1.0, 2.0)) -> ScenarioResult:
        checks = []
        for b in radii:
            family = self.catalog.build("S2xS1", {"b": b})
            traj, report = self.flow.run_family(family)
            checks += [c for c in self.check_flow(family, traj, report) if c.name != "curvature_bound"]
            if report.Lambda is not None:
                checks.append(Check.compare(
                    "lambda_limit", abs(report.Lambda - 1.5) / 1.5, DEFAULT_TOLERANCES["lambda"],
                    family=family.family_id, provenance=Provenance.DERIVED, note=f"Lambda={report.Lambda!r}",
                ))
        return self._criterion(2, ScenarioKind.FLOW_RUN, "S2 x S1(b) closed form and Lambda = 3/2", checks)

    def criterion_s1r2(self, angles: Sequence[float] = (0.3, 0.8, 1.2)) -> ScenarioResult:
        checks = []
        for phi_a in angles:
            family = self.catalog.build("S1xR2", {"phi_a": phi_a})
            traj, report = self.flow.run_family(family)
            checks += [
                c for c in self.check_flow(family, traj, report)
                if c.name in ("implicit_relation", "singular_time")
            ]
        return self._criterion(3, ScenarioKind.FLOW_RUN, "S1(a) x R2 implicit relation and singular time", checks)

    def criterion_cylinders(self, rng: np.random.Generator, count: int = 20) -> ScenarioResult:
        checks = []
        mismatches = 0
        for _ in range(count):
            kappa = rng.uniform(-2.0, 2.0)
            if abs(kappa) < 0.05:
                kappa = 0.05
            tau = rng.uniform(-1.0, 1.0)
            if abs(kappa - 4 * tau * tau) < 0.05:
                tau = 0.0
            k_g = rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 2.0)
            family = self.catalog.ektau_vertical_cylinder(kappa, tau, k_g)
            traj, report = self.flow.run_family(family)
            flow_checks = [
                c for c in self.check_flow(family, traj, report)
                if c.name in ("implicit_relation", "singular_time", "printed_singular_time")
            ]
            mismatches += sum(1 for c in flow_checks if c.status == CheckStatus.FLAGGED)
            checks += flow_checks
        return self._criterion(
            4, ScenarioKind.FLOW_RUN, "E(kappa, tau) vertical cylinders", checks, printed_time_mismatches=mismatches,
        )

    def criterion_products(self, rng: np.random.Generator, count: int = 50) -> ScenarioResult:
        checks = []
        draws = {
            "S2xS2": (PairModel.SPHERE, lambda: rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 0.95)),
            "H2xH2": (PairModel.LORENTZ, lambda: rng.uniform(1.05, 5.0)),
        }
        for name, (model, draw) in draws.items():
            for _ in range(count):
                s = float(draw())
                family = self.catalog.build(name, {"s": s})
                checks.append(self.check_jacobi(family))
                expected = family.eigenvalues_of_r(0.0)
                produced = np.array([self.catalog.product_shape_operator(s, cls, model) for cls in SHAPE_CLASSES])
                checks.append(Check.compare(
                    "eigenvalue_model", float(np.max(np.abs(produced - expected))),
                    DEFAULT_TOLERANCES["eigenvalues"], family=family.family_id,
                    provenance=_provenance(family, "eigenvalues"),
                ))
        return self._criterion(5, ScenarioKind.JACOBI_PROBE, "S2 x S2 and H2 x H2 Jacobi route", checks)

    def criterion_riccati(self) -> ScenarioResult:
        checks = []
        for name, params in DEFAULT_CATALOG:
            checks.append(self.check_riccati(self.catalog.build(name, params)))
        return self._criterion(6, ScenarioKind.JACOBI_PROBE, "Riccati identity at h = 1e-3", checks)

    def criterion_type_one(self) -> ScenarioResult:
        checks = []
        flagged = 0
        for name, params in DEFAULT_CATALOG:
            family = self.catalog.build(name, params)
            try:
                traj, report = self.flow.run_family(family)
            except InconclusiveWindow as e:
                checks.append(Check(name="type_I", family=family.family_id, status=CheckStatus.FAILED, note=str(e)))
                continue
            if report.T is None:
                continue
            checks.append(self._type_one_check(family.family_id, report))
            bound = self._bound_check(family, traj, report)
            flagged += bound.status == CheckStatus.FLAGGED
            checks.append(bound)
        return self._criterion(
            7, ScenarioKind.FLOW_RUN, "Type I classification and curvature bound", checks, bound_flagged=flagged,
        )

    def bump_checks(self, vertices: Tuple[int, int], bump: Optional[dict] = None) -> Tuple[List[Check], dict]:
        """Flat control, headline bump and the resolution comparison"""
        bump = dict(HEADLINE_BUMP, **(bump or {}))
        tol = DEFAULT_TOLERANCES
        checks = []
        t_stars = {}
        details = {}

        for m in vertices:
            dt = self.csf.default_dt(bump["R"], m)
            # the flat control doubles as the floor run for this resolution
            flat = self.csf.run_bump_experiment(
                bump["p"], 0.0, bump["sigma"], bump["R"], O=bump["O"], vertices=m, dt=dt, floor=0.0,
            )
            floor = float(np.nanmax([s.dev for s in flat.samples]))
            checks.append(Check.compare(
                "shrinking_circle", self.shrinking_circle_error(flat.samples, bump["R"], m),
                tol["shrinking_circle"], family=f"flat(m={m})", provenance=Provenance.TRIVIAL,
            ))
            checks.append(Check(
                name="flat_at_floor", family=f"flat(m={m})",
                status=CheckStatus.FAILED if flat.t_star_found else CheckStatus.PASSED,
                value=floor, tolerance=flat.threshold,
                provenance=Provenance.TRIVIAL,
            ))

            report = self.csf.run_bump_experiment(
                bump["p"], bump["h"], bump["sigma"], bump["R"], O=bump["O"], vertices=m, dt=dt, floor=floor,
            )
            label = f"bump(m={m})"
            checks.append(Check(
                name="t_star_before_extinction", family=label,
                status=CheckStatus.PASSED if report.before_extinction else CheckStatus.FAILED,
                value=report.t_star, tolerance=report.extinction_estimate, provenance=Provenance.DERIVED,
                note="; ".join(report.notes) or None,
            ))
            checks.append(Check(
                name="monotone_area_length", family=label,
                status=CheckStatus.PASSED if report.area_monotone and report.length_monotone else CheckStatus.FAILED,
                provenance=Provenance.TRIVIAL,
            ))
            t_stars[m] = report.t_star
            details[str(m)] = report.summary()

        coarse, fine = (t_stars[m] for m in vertices)
        if coarse is None or fine is None:
            checks.append(Check(
                name="t_star_resolution", status=CheckStatus.FAILED, note="t* missing at one resolution",
            ))
        else:
            checks.append(Check.compare(
                "t_star_resolution", abs(coarse - fine) / fine, tol["resolution"],
                provenance=Provenance.DERIVED, note=f"m={vertices[0]} vs m={vertices[1]}",
            ))
        return checks, details

    def shrinking_circle_error(self, samples, R: float, vertices: int, fraction: float = 0.9) -> float:
        """Largest relative error of sqrt(R^2 - 2t) up to a fraction of the extinction time"""
        extinction = 0.5 * R * R
        # area of a regular m-gon inscribed in a circle of radius r
        polygon = 0.5 * vertices * math.sin(2.0 * math.pi / vertices)
        errors = []
        for s in samples:
            if s.t > fraction * extinction:
                break
            radius = math.sqrt(s.area / polygon)
            exact = math.sqrt(R * R - 2.0 * s.t)
            errors.append(abs(radius - exact) / exact)
        return max(errors) if errors else math.inf

    def criterion_bump(self, vertices: Tuple[int, int] = (512, 1024)) -> ScenarioResult:
        checks, details = self.bump_checks(vertices)
        return self._criterion(
            8, ScenarioKind.BUMP_EXPERIMENT, "bump experiment leaves the parallels before extinction",
            checks, runs=details,
        )

    def selftest(self, seed: int = 0, bump_vertices: Tuple[int, int] = (512, 1024)) -> ScenarioResult:
        """Acceptance criteria one through eight with fixed seeds"""
        rng = np.random.default_rng(seed)
        steps = [
            lambda: self.criterion_helicoid(rng),
            self.criterion_s2s1,
            self.criterion_s1r2,
            lambda: self.criterion_cylinders(rng),
            lambda: self.criterion_products(rng),
            self.criterion_riccati,
            self.criterion_type_one,
            lambda: self.criterion_bump(bump_vertices),
        ]

        children = []
        errors = []
        for number, step in enumerate(steps, start=1):
            started = time.perf_counter()
            try:
                children.append(step())
            except IsoFlowError as e:
                logger.error(f"Criterion {number} raised {type(e).__name__}: {e}")
                errors.append(f"criterion-{number}: {type(e).__name__}: {e}")
            logger.info(f"Criterion {number} took {time.perf_counter() - started:.1f}s")

        result = ScenarioResult(
            id="selftest", kind=ScenarioKind.CATALOG_VERIFY, children=children, errors=errors,
            details={"seed": seed, "bump_vertices": list(bump_vertices)},
        )
        logger.info(f"Selftest {'passed' if result.passed else 'failed'}: {len(result.failures)} failed checks")
        return result
