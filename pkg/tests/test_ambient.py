import numpy as np
import pytest

from isoflow.models.ambient import AmbientFamily, NormalFrameContext
from isoflow.utils.config import CurvatureNorm, Settings
from isoflow.services.ambient_service import AmbientService
from isoflow.utils.errors import DegenerateDelta, ParameterViolation, UnsupportedFamily


def test_dimension_defaults(ambient_service):
    spec = ambient_service.build_spec({"family": "S2xS2", "s": 0.2})
    assert spec.n == 3
    assert spec.ambient_dimension == 4
    assert ambient_service.build_spec({"family": "EkTau", "kappa": 1.0, "tau": 0.0}).n == 2


def test_h2h2_requires_s_above_one(ambient_service):
    with pytest.raises(ParameterViolation) as exc:
        ambient_service.build_spec({"family": "H2xH2", "s": 0.5})
    assert "s must exceed 1" in exc.value.messages


def test_ektau_degenerate_bundle_curvature(ambient_service):
    with pytest.raises(ParameterViolation) as exc:
        ambient_service.build_spec({"family": "EkTau", "kappa": 1.0, "tau": 0.5})
    assert "kappa - 4 tau^2 must be nonzero" in exc.value.messages


def test_bump_violations_are_all_reported(ambient_service):
    with pytest.raises(ParameterViolation) as exc:
        ambient_service.build_spec({
            "family": "BumpProduct", "p": (1.0, 0.0), "h": 1.0, "sigma": 1.0, "R": 0.5, "O": (0.0, 0.0),
        })
    assert "R must exceed sigma" in exc.value.messages
    assert "|p - O| must be below R - sigma" in exc.value.messages


def test_s1r2_radius_and_angle_must_agree(ambient_service):
    spec = ambient_service.build_spec({"family": "S2xR2", "case": "S1xR2", "a": 0.5})
    assert spec.colatitude() == pytest.approx(np.arcsin(0.5))
    with pytest.raises(ParameterViolation):
        ambient_service.build_spec({"family": "S2xR2", "case": "S1xR2", "a": 0.5, "phi_a": 1.0})


@pytest.mark.parametrize("family,expected", [("S2xS2", 0.5), ("H2xH2", -0.5)])
def test_diagonal_product_operator(ambient_service, family, expected):
    s = 0.3 if family == "S2xS2" else 2.0
    spec = ambient_service.build_spec({"family": family, "s": s})
    R_bar = ambient_service.curvature_operator(spec)
    np.testing.assert_allclose(R_bar, np.diag([expected, expected, 0.0]), atol=1e-15)
    assert ambient_service.ricci_normal(spec) == pytest.approx(2 * expected)


def test_s2r2_cases(ambient_service):
    cylinder = ambient_service.build_spec({"family": "S2xR2", "case": "S2xS1", "b": 1.0})
    np.testing.assert_allclose(ambient_service.curvature_operator(cylinder), np.zeros((3, 3)), atol=1e-15)

    circle = ambient_service.build_spec({"family": "S2xR2", "case": "S1xR2", "phi_a": 1.0})
    np.testing.assert_allclose(ambient_service.curvature_operator(circle), np.diag([1.0, 0.0, 0.0]), atol=1e-15)

    with pytest.raises(ParameterViolation):
        ambient_service.curvature_model(circle, NormalFrameContext(C=-1))


@pytest.mark.parametrize("c", [-1.0, 0.0, 2.0])
def test_space_form_operator(ambient_service, c):
    spec = ambient_service.build_spec({"family": "SpaceForm", "c": c, "n": 3})
    np.testing.assert_allclose(ambient_service.curvature_operator(spec), c * np.eye(3), atol=1e-15)
    assert ambient_service.ricci_normal(spec) == pytest.approx(3 * c)


def test_space_form_bounds(ambient_service):
    bounds = ambient_service.ambient_bounds(ambient_service.build_spec({"family": "SpaceForm", "c": 1.0, "n": 2}))
    assert bounds.norm == CurvatureNorm.OPERATOR
    assert bounds.sup_ricci == pytest.approx(2.0)
    assert bounds.sup_curvature == pytest.approx(1.0)
    assert bounds.C_tilde == pytest.approx(6.0)


def test_frobenius_norm_is_larger():
    spec_data = {"family": "S2xS2", "s": 0.1}
    op = AmbientService(Settings(curvature_norm="operator"))
    frob = AmbientService(Settings(curvature_norm="frobenius"))
    assert frob.ambient_bounds(frob.build_spec(spec_data)).C_tilde > op.ambient_bounds(op.build_spec(spec_data)).C_tilde


def test_ektau_bounds_include_derivative(ambient_service):
    spec = ambient_service.build_spec({"family": "EkTau", "kappa": 1.0, "tau": 0.3})
    bounds = ambient_service.ambient_bounds(spec)
    assert bounds.sup_curvature_derivative == pytest.approx(8 * 0.3 * abs(1.0 - 4 * 0.09))


def test_flat_bump_has_no_curvature(ambient_service):
    spec = ambient_service.build_spec({
        "family": "BumpProduct", "p": (0.0, 0.0), "h": 0.0, "sigma": 0.5, "R": 2.0, "O": (0.0, 0.0),
    })
    assert ambient_service.ambient_bounds(spec).C_tilde == 0.0


def test_rotating_frame_model(ambient_service):
    model = ambient_service.rotating_frame_model(kappa=1.0, tau=0.3, H=0.5, nu=0.0)
    assert model.delta == pytest.approx(-1.0)
    np.testing.assert_allclose(model.omega, [[0.0, -0.3], [0.3, 0.0]])
    # Ric(N, N) = kappa - 2 tau^2 for a horizontal normal
    assert model.ricci_normal == pytest.approx(1.0 - 2 * 0.09)
    with pytest.raises(DegenerateDelta):
        ambient_service.rotating_frame_model(kappa=4.0, tau=1.0, H=0.0, nu=0.0)


def test_ektau_has_no_constant_operator(ambient_service):
    spec = ambient_service.build_spec({"family": "EkTau", "kappa": 1.0, "tau": 0.3})
    assert spec.family == AmbientFamily.EKTAU
    with pytest.raises(UnsupportedFamily):
        ambient_service.curvature_model(spec)
