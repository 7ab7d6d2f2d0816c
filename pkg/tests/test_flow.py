import math

import numpy as np
import pytest

from isoflow.models.flow import FlowDescriptor, FlowStatus, Route, SingularityType
from isoflow.services.flow_service import evo_eq_rhs, normA2_derivative_r, tangent_contraction
from isoflow.utils.errors import FocalPoint, NoSingularity, ParameterViolation


def test_evolution_rhs():
    assert evo_eq_rhs(2.0, 1.0) == pytest.approx(12.0)
    assert evo_eq_rhs(2.0, 1.0, contraction=0.5) == pytest.approx(14.0)


def test_normA2_derivative_r():
    A = np.diag([1.0, 2.0])
    assert normA2_derivative_r(A, np.eye(2)) == pytest.approx(24.0)
    assert normA2_derivative_r(A, np.zeros((2, 2))) == pytest.approx(18.0)


def test_tangent_contraction_in_unit_sphere(catalog_service):
    model = catalog_service.build("SpaceFormClifford", {"n1": 1, "n2": 2, "theta": 0.6}).curvature_model
    # in a space form of curvature c the contraction is c((tr A)^2 - n|A|^2)
    A = np.diag([1.0, 2.0, -1.0])
    assert tangent_contraction(A, model) == pytest.approx(4.0 - 3.0 * 6.0)
    assert tangent_contraction(0.7 * np.eye(3), model) == pytest.approx(0.0, abs=1e-14)


def test_tangent_contraction_vanishes_off_the_curved_factor(catalog_service):
    family = catalog_service.build("S2xS1", {"b": 1.0})
    assert tangent_contraction(family.shape_operator.matrix, family.curvature_model) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("name,params", [
    ("S2xS1", {"b": 1.0}),
    ("S1xR2", {"phi_a": 1.0}),
    ("SpaceFormSphere", {"c": 1.0, "n": 3, "R0": 1.0}),
    ("SpaceFormClifford", {"n1": 1, "n2": 2, "theta": 0.6}),
])
def test_measured_curvature_growth_matches_evolution(catalog_service, flow_service, verifier, name, params):
    family = catalog_service.build(name, params)
    traj, report = flow_service.run_family(family)
    checks = {c.name: c for c in verifier.check_flow(family, traj, report)}
    for key in ("evolution_rate", "evolution_equation"):
        assert not checks[key].failed, checks[key]
        assert checks[key].value < 1e-5


def test_evolution_equation_needs_parallel_A(catalog_service, flow_service, verifier):
    family = catalog_service.build("H2xH2", {"s": 2.0})
    traj, report = flow_service.run_family(family)
    names = [c.name for c in verifier.check_flow(family, traj, report)]
    assert "evolution_rate" in names
    assert "evolution_equation" not in names


def test_descriptor_orientation(catalog_service, flow_service):
    family = catalog_service.build("S2xS1", {"b": 1.0})
    descriptor = flow_service.descriptor(family)
    assert descriptor.orientation == -1
    assert descriptor.focal_r == pytest.approx(-1.0)
    assert descriptor.ricci_normal == pytest.approx(0.0)


def test_jacobi_route_finds_focal_radius(catalog_service, flow_service):
    family = catalog_service.build("S2xS2", {"s": 0.5})
    descriptor = flow_service.descriptor(family, Route.JACOBI)
    assert descriptor.route == Route.JACOBI
    assert descriptor.focal_r == pytest.approx(family.focal_r, abs=1e-8)
    assert descriptor.H_of_r(0.2) == pytest.approx(family.H_of_r(0.2), rel=1e-9)


def test_integrate_rejects_non_positive_time(catalog_service, flow_service):
    descriptor = flow_service.descriptor(catalog_service.build("S2xS1", {"b": 1.0}))
    with pytest.raises(ParameterViolation):
        flow_service.integrate_flow(descriptor, 0.0)


def test_s2s1_flow_matches_closed_form(catalog_service, flow_service):
    family = catalog_service.build("S2xS1", {"b": 1.0})
    traj, report = flow_service.run_family(family)
    assert traj.status == FlowStatus.FOCAL_REACHED
    assert report.T == pytest.approx(1.5, abs=1e-6)

    t, eps, _, _ = traj.arrays()
    keep = t <= 0.99 * report.T
    exact = np.sqrt(1.0 - 2.0 * t[keep] / 3.0) - 1.0
    np.testing.assert_allclose(eps[keep], exact, atol=1e-7)


def test_s2s1_type_one_limit(catalog_service, flow_service):
    traj, report = flow_service.run_family(catalog_service.build("S2xS1", {"b": 1.0}))
    assert report.type == SingularityType.TYPE_I
    assert report.Lambda == pytest.approx(1.5, rel=0.01)
    assert report.window_stable


def test_helicoid_translates(catalog_service, flow_service):
    family = catalog_service.ektau_parabolic_helicoid(kappa=-2.0, tau=0.4, H=0.5)
    traj, report = flow_service.run_family(family, t_max=10.0)
    assert traj.status == FlowStatus.MAX_TIME
    assert report.type == SingularityType.NO_SINGULARITY
    for sample in traj.samples:
        assert sample.epsilon == pytest.approx(0.5 * sample.t, abs=1e-9)


def test_minimal_slice_stays_put(catalog_service, flow_service):
    traj, report = flow_service.run_family(catalog_service.build("S2xR2Slice", {}), t_max=2.0)
    assert traj.final.epsilon == 0.0
    with pytest.raises(NoSingularity):
        flow_service.detect_singularity(traj)


def test_eternal_cylinder_converges(catalog_service, flow_service):
    family = catalog_service.ektau_vertical_cylinder(kappa=-1.0, tau=0.2, k_g=0.5)
    traj, report = flow_service.run_family(family, t_max=60.0)
    assert report.T is None
    # epsilon approaches the minimal parallel where H vanishes
    assert abs(traj.final.H) < 1e-6
    relation = max(abs(family.implicit_relation(s.epsilon, s.t)) for s in traj.samples)
    assert relation < 1e-7


@pytest.mark.parametrize("s", [0.2, -0.4])
def test_s2s2_singular_time(catalog_service, flow_service, s):
    family = catalog_service.build("S2xS2", {"s": s})
    traj, report = flow_service.run_family(family)
    assert report.T == pytest.approx(family.singular_time, abs=1e-6)
    assert np.sign(traj.final.epsilon) == np.sign(s)


def test_h2h2_singular_time(catalog_service, flow_service):
    family = catalog_service.build("H2xH2", {"s": 3.0})
    traj, report = flow_service.run_family(family)
    assert report.T == pytest.approx(1.5 * math.log(3.0), abs=1e-6)
    relation = max(abs(family.implicit_relation(s.epsilon, s.t)) for s in traj.samples if s.t <= 0.99 * report.T)
    assert relation < 1e-7


def test_jacobi_route_agrees_with_catalog(catalog_service, flow_service):
    family = catalog_service.build("H2xH2", {"s": 2.0})
    _, catalog_report = flow_service.run_family(family, Route.CATALOG)
    _, jacobi_report = flow_service.run_family(family, Route.JACOBI)
    assert jacobi_report.T == pytest.approx(catalog_report.T, abs=1e-6)


def test_bound_check_skips_flat_ambient(catalog_service, flow_service):
    family = catalog_service.build("SpaceFormSphere", {"c": 0.0, "n": 2, "R0": 1.0})
    traj, report = flow_service.run_family(family)
    check = flow_service.bound_check(0.0, traj, report)
    assert check.skipped and check.ok


def test_bound_check_on_round_sphere(ambient_service, catalog_service, flow_service):
    family = catalog_service.build("SpaceFormSphere", {"c": 1.0, "n": 3, "R0": 1.0})
    traj, report = flow_service.run_family(family)
    C_tilde = ambient_service.ambient_bounds(family.space).C_tilde
    check = flow_service.bound_check(C_tilde, traj, report, time_scale=1.0 / family.n)
    assert not check.skipped
    assert check.window_count > 0
    assert check.worst_ratio is not None


def test_custom_descriptor():
    descriptor = FlowDescriptor(
        name="linear",
        n=1,
        H_of_r=lambda r: -1.0,
        normA2_of_r=lambda r: 1.0,
        detD_of_r=lambda r: 1.0 + r,
    )
    assert descriptor.orientation == -1


def test_route_errors_read_as_blowup(flow_service):
    def H_of_r(r: float) -> float:
        if r < -0.5:
            raise FocalPoint(r, 0.0)
        return -1.0

    descriptor = FlowDescriptor(
        name="edge", n=1, H_of_r=H_of_r, normA2_of_r=lambda r: 1.0, detD_of_r=lambda r: 1.0 + r,
    )
    traj = flow_service.integrate_flow(descriptor, 2.0)
    assert traj.status == FlowStatus.BLOW_UP
    assert traj.t_end == pytest.approx(0.5, abs=1e-6)


def test_type_one_bound_without_singularity(catalog_service, flow_service):
    family = catalog_service.ektau_parabolic_helicoid(kappa=-2.0, tau=0.4, H=0.5)
    traj, report = flow_service.run_family(family, t_max=5.0)
    assert flow_service.typeI_bound_check(10.0, traj, report)
    assert flow_service.bound_check(10.0, traj, report).skipped
