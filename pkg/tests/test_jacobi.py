import math

import numpy as np
import pytest

from isoflow.models.jacobi import JacobiState, ShapeOperator
from isoflow.utils.errors import FocalPoint, InsufficientSamples, ParameterViolation


def test_shape_operator_must_be_symmetric():
    with pytest.raises(ValueError):
        ShapeOperator(matrix=[[0.0, 1.0], [0.0, 0.0]])
    A0 = ShapeOperator.diagonal([1.0, 2.0, 3.0])
    assert A0.n == 3
    assert A0.mean_curvature == pytest.approx(2.0)
    assert A0.flipped().trace == pytest.approx(-6.0)


def test_initial_state():
    state = JacobiState.initial(ShapeOperator.diagonal([0.5, -1.0]))
    assert state.det == pytest.approx(1.0)
    np.testing.assert_allclose(state.Dprime, np.diag([-0.5, 1.0]))


@pytest.mark.parametrize("c", [-1.0, 0.0, 1.0])
def test_numeric_matches_space_form_closed_form(jacobi_service, c):
    A0 = ShapeOperator.diagonal([0.3, -0.2, 0.1])
    numeric = jacobi_service.propagate_numeric(c * np.eye(3), A0, 0.8)
    closed = jacobi_service.closed_form_D_spaceform(c, A0, 0.8)
    np.testing.assert_allclose(numeric.D, closed.D, atol=1e-10)
    np.testing.assert_allclose(numeric.Dprime, closed.Dprime, atol=1e-10)


def test_propagate_numeric_rejects_negative_r(jacobi_service):
    with pytest.raises(ParameterViolation):
        jacobi_service.propagate_numeric(np.zeros((2, 2)), ShapeOperator.diagonal([1.0, 1.0]), -0.1)


def test_propagator_window(jacobi_service):
    propagator = jacobi_service.propagator(np.zeros((2, 2)), ShapeOperator.diagonal([1.0, 1.0]), 0.5)
    with pytest.raises(ParameterViolation):
        propagator.state_at(0.7)


def test_flat_sphere_focal_radius(jacobi_service):
    # Round sphere of radius 2 in R^3 with the inward normal
    A0 = ShapeOperator.diagonal([0.5, 0.5])
    focal = jacobi_service.focal_radius(np.zeros((2, 2)), A0, window=4.0)
    assert focal == pytest.approx(2.0, abs=1e-8)


def test_unit_sphere_in_s3_focal_radius(jacobi_service):
    # Geodesic sphere of radius R0 in S^3 focuses at its center
    R0 = 1.2
    A0 = ShapeOperator.diagonal([1.0 / math.tan(R0)] * 2)
    focal = jacobi_service.focal_radius(np.eye(2), A0, window=3.0)
    assert focal == pytest.approx(R0, abs=1e-8)


def test_no_focal_point_when_expanding(jacobi_service):
    A0 = ShapeOperator.diagonal([-1.0, -1.0])
    assert jacobi_service.focal_radius(np.zeros((2, 2)), A0, window=5.0) is None
    assert jacobi_service.focal_radius(np.zeros((2, 2)), A0, window=5.0, direction=-1) == pytest.approx(1.0, abs=1e-8)


def test_parallel_geometry_of_flat_sphere(jacobi_service):
    A0 = ShapeOperator.diagonal([0.5, 0.5])
    geometry = jacobi_service.parallel_geometry(jacobi_service.closed_form_D_spaceform(0.0, A0, 1.0), 2)
    assert geometry.H == pytest.approx(1.0)
    assert geometry.normA2 == pytest.approx(2.0)
    assert geometry.detD == pytest.approx(0.25)

    with pytest.raises(FocalPoint):
        jacobi_service.parallel_geometry(jacobi_service.closed_form_D_spaceform(0.0, A0, 2.0), 2)


def test_focal_threshold_scales_with_D(jacobi_service):
    # det = 1e-11 is above the bare threshold, but D is numerically singular at this size
    grown = JacobiState(r=1.0, D=np.diag([1e6, 1e-17]), Dprime=np.eye(2))
    with pytest.raises(FocalPoint):
        jacobi_service.parallel_geometry(grown, 2)

    small = JacobiState(r=1.0, D=np.diag([1e-5, 1e-6]), Dprime=np.eye(2))
    assert jacobi_service.parallel_geometry(small, 2).detD == pytest.approx(1e-11)


def test_focal_radius_confirms_relative_to_D(jacobi_service):
    def source(r: float) -> JacobiState:
        return JacobiState(r=r, D=np.diag([1e9 * (1.0 + r), 1.0 - r]), Dprime=np.diag([1e9, -1.0]))

    # the bisected root leaves |det D| far above 1e-6 in absolute terms
    assert jacobi_service.focal_radius(source, window=2.1) == pytest.approx(1.0, abs=1e-9)


def test_riccati_residual_for_space_form(jacobi_service):
    c = 1.0
    A0 = ShapeOperator.diagonal([0.4, 0.4, 0.4])
    rs = np.arange(0.0, 0.5, 1e-3)
    samples = jacobi_service.sample_geometry(
        jacobi_service.propagator(c * np.eye(3), A0, 0.5), rs, 3
    )
    assert jacobi_service.riccati_residual(samples, ricci=3 * c) < 1e-6


def test_riccati_residual_needs_samples(jacobi_service):
    A0 = ShapeOperator.diagonal([0.4])
    samples = [jacobi_service.parallel_geometry(jacobi_service.closed_form_D_spaceform(0.0, A0, r), 1) for r in (0, 0.1)]
    with pytest.raises(InsufficientSamples):
        jacobi_service.riccati_residual(samples, 0.0)


def test_ektau_closed_form_at_zero(jacobi_service):
    state = jacobi_service.closed_form_D_ektau(kappa=1.0, tau=0.3, H=0.5, nu=0.0, r=0.0)
    np.testing.assert_allclose(state.D, np.eye(2), atol=1e-15)
    assert state.det == pytest.approx(1.0)


def test_rotating_frame_propagator_matches_ektau_closed_form(ambient_service, jacobi_service, rng):
    rs = np.array([0.1, 0.35, 0.7, 1.0])
    worst = 0.0
    for _ in range(200):
        kappa, tau, H = rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)
        nu = rng.uniform(0.0, 1.0)
        frame = ambient_service.rotating_frame_model(kappa, tau, H, nu)
        # D'(0) = -A0 - omega for the closed form's D'(0) = [[0, 2 tau], [0, -2H]]
        A0 = ShapeOperator(matrix=[[0.0, -tau], [-tau, 2.0 * H]])
        propagator = jacobi_service.propagator(frame.K, A0, rs[-1], rotation=frame.omega)
        D, Dp = propagator.states(rs)
        for i, r in enumerate(rs):
            closed = jacobi_service.closed_form_D_ektau(kappa, tau, H, nu, r)
            scale = max(1.0, float(np.abs(closed.D).max()), float(np.abs(closed.Dprime).max()))
            worst = max(worst, float(np.abs(D[i] - closed.D).max()) / scale)
            worst = max(worst, float(np.abs(Dp[i] - closed.Dprime).max()) / scale)
    assert worst < 1e-8
