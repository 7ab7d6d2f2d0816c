import math

import numpy as np
import pytest

from isoflow.models.catalog import AnalyticKind, PairModel, Provenance, TangentClass
from isoflow.utils.errors import DegenerateCurve, ParameterViolation

CLASSES = [TangentClass.W_W, TangentClass.W_MINUS_W, TangentClass.COMPLEMENT]


def test_build_unknown_family(catalog_service):
    with pytest.raises(ParameterViolation) as exc:
        catalog_service.build("Torus", {})
    assert "unknown family 'Torus'" in exc.value.messages


def test_build_missing_parameter(catalog_service):
    with pytest.raises(ParameterViolation) as exc:
        catalog_service.build("S2xS1", {})
    assert exc.value.messages == ["missing parameter b"]


def test_h2h2_precondition(catalog_service):
    with pytest.raises(ParameterViolation) as exc:
        catalog_service.build("H2xH2", {"s": 0.5})
    assert "s must exceed 1" in exc.value.messages


def test_helicoid_precondition(catalog_service):
    with pytest.raises(ParameterViolation):
        catalog_service.ektau_parabolic_helicoid(kappa=-1.0, tau=0.2, H=0.6)


def test_minimal_cylinder_is_rejected(catalog_service):
    with pytest.raises(DegenerateCurve):
        catalog_service.ektau_vertical_cylinder(kappa=1.0, tau=0.3, k_g=0.0)


def test_s2s1_closed_form(catalog_service):
    family = catalog_service.build("S2xS1", {"b": 2.0})
    assert family.n == 3
    assert family.singular_time == pytest.approx(6.0)
    assert family.focal_r == pytest.approx(-2.0)
    assert family.H0 == pytest.approx(-1.0 / 6.0)
    assert family.epsilon_of_t(1.5) == pytest.approx(math.sqrt(3.0) - 2.0)
    assert family.implicit_relation(family.epsilon_of_t(1.5), 1.5) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kappa,k_g,expected", [
    (0.0, 2.0, 0.25),
    (1.0, 1.0, math.log(2.0)),
    (-1.0, 2.0, math.log(0.75) / -1.0),
])
def test_cylinder_singular_time(catalog_service, kappa, k_g, expected):
    family = catalog_service.ektau_vertical_cylinder(kappa, 0.1 if kappa == 0 else 0.3, k_g)
    assert family.singular_time == pytest.approx(expected, rel=1e-12)
    assert family.analytic == AnalyticKind.IMPLICIT


def test_eternal_cylinder(catalog_service):
    family = catalog_service.ektau_vertical_cylinder(kappa=-1.0, tau=0.2, k_g=0.5)
    assert family.singular_time is None
    assert family.focal_r is None


def test_printed_singular_time_disagrees(catalog_service):
    family = catalog_service.ektau_vertical_cylinder(kappa=1.0, tau=0.3, k_g=1.0)
    printed = family.notes["printed_singular_time"]
    assert printed == pytest.approx(0.25 * math.log(2.0))
    assert abs(printed - family.singular_time) > 0.1


def test_cylinder_relation_at_focal_time(catalog_service):
    family = catalog_service.ektau_vertical_cylinder(kappa=1.0, tau=0.3, k_g=1.0)
    assert family.implicit_relation(family.focal_r, family.singular_time) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("s", [-0.7, -0.2, 0.3, 0.9])
def test_s2s2_eigenvalues_average_to_H(catalog_service, s):
    family = catalog_service.build("S2xS2", {"s": s})
    for r in np.linspace(0.0, 0.8 * family.focal_r, 7):
        assert np.sum(family.eigenvalues_of_r(r)) / 3 == pytest.approx(family.H_of_r(r), rel=1e-12)
    assert np.sign(family.focal_r) == np.sign(s)


@pytest.mark.parametrize("s", [1.1, 2.0, 4.5])
def test_h2h2_eigenvalues_average_to_H(catalog_service, s):
    family = catalog_service.build("H2xH2", {"s": s})
    assert family.singular_time == pytest.approx(1.5 * math.log(s))
    for r in np.linspace(0.0, 0.8 * family.focal_r, 7):
        assert np.sum(family.eigenvalues_of_r(r)) / 3 == pytest.approx(family.H_of_r(r), rel=1e-12)
    assert "implicit_sign" in family.notes


def test_h2h2_implicit_relation_solves_flow(catalog_service):
    family = catalog_service.build("H2xH2", {"s": 2.0})
    t, h = 0.3, 1e-6
    eps_dot = (family.epsilon_of_t(t + h) - family.epsilon_of_t(t - h)) / (2 * h)
    assert eps_dot == pytest.approx(family.H_of_r(family.epsilon_of_t(t)), rel=1e-7)
    assert family.implicit_relation(family.epsilon_of_t(t), t) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("name,s,model", [
    ("S2xS2", 0.4, PairModel.SPHERE),
    ("S2xS2", -0.6, PairModel.SPHERE),
    ("H2xH2", 1.7, PairModel.LORENTZ),
])
def test_model_shape_operator_matches_eigenvalues(catalog_service, name, s, model):
    family = catalog_service.build(name, {"s": s})
    produced = [catalog_service.product_shape_operator(s, cls, model) for cls in CLASSES]
    np.testing.assert_allclose(produced, family.eigenvalues_of_r(0.0), atol=1e-10)


def test_displacement_invariant(catalog_service):
    s, r = 0.35, 0.4
    theta = math.acos(s)
    assert catalog_service.displacement_invariant(s, r, PairModel.SPHERE) == pytest.approx(
        math.cos(theta - math.sqrt(2) * r), abs=1e-12
    )
    eta = math.acosh(2.5)
    assert catalog_service.displacement_invariant(2.5, 0.3, PairModel.LORENTZ) == pytest.approx(
        math.cosh(eta - math.sqrt(2) * 0.3), rel=1e-12
    )


def test_lorentz_shape_operator_precondition(catalog_service):
    with pytest.raises(ParameterViolation):
        catalog_service.lorentz_shape_operator(0.5, TangentClass.W_W)


def test_s1r2_and_s1s2_share_parallel_geometry(catalog_service):
    flat = catalog_service.build("S1xR2", {"phi_a": 1.0})
    round_ = catalog_service.build("S1xS2", {"phi_a": 1.0})
    assert flat.singular_time == pytest.approx(3 * math.log(1 / math.cos(1.0)))
    assert round_.singular_time == pytest.approx(flat.singular_time)
    assert flat.ricci_normal == pytest.approx(1.0)
    assert round_.H_of_r(0.4) == pytest.approx(flat.H_of_r(0.4))


def test_space_form_sphere(catalog_service):
    flat = catalog_service.build("SpaceFormSphere", {"c": 0.0, "n": 2, "R0": 1.0})
    assert flat.singular_time == pytest.approx(0.5)
    assert flat.epsilon_of_t(0.32) == pytest.approx(1.0 - 0.6)

    equator = catalog_service.spaceform_sphere(1.0, 2, math.pi / 2)
    assert equator.focal_r is None
    assert equator.singular_time is None

    beyond = catalog_service.spaceform_sphere(1.0, 2, 2.0)
    assert beyond.focal_r == pytest.approx(2.0 - math.pi)
    assert beyond.H0 < 0


def test_minimal_clifford_torus(catalog_service):
    theta = math.atan(math.sqrt(2.0))
    family = catalog_service.spaceform_clifford(1, 2, theta)
    assert abs(family.H0) < 1e-12
    assert family.focal_r is None


def test_record_is_self_describing(catalog_service):
    record = catalog_service.build("S2xS2", {"s": 0.5}).record()
    assert record["family"] == "S2xS2"
    assert record["provenance"]["phi"] == Provenance.PAPER.value
    assert record["singular_time"] == pytest.approx(1.5 * math.log(2.0))
    assert "formulas" in record
