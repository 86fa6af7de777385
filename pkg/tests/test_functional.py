"""Volume, variation families and the closed-form variations against FD in t."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightcone.chart import builtin
from lightcone.errors import SPrecondError, SpacelikeViolation, SpecError, StencilRangeError
from lightcone.frame import build_frame
from lightcone.functional import (
    admissible_lift,
    fd_derivative,
    first_variation_admissible,
    first_variation_general,
    general_variation,
    make_characteristic_variation,
    reduced_admissible_integrand,
    second_variation_characteristic,
    second_variation_general,
    second_variation_terms,
    variation_report,
    volume,
)
from lightcone.quadrature import build_grid, bump


def one(x):
    return np.ones(np.shape(x)[:-1])


def quad_phi(c):
    def phi0(x):
        x = np.asarray(x)
        return c[0] + c[1] * x[..., 0] + c[2] * x[..., 1] + c[3] * x[..., 0] * x[..., 1]
    return phi0


@pytest.fixture(scope="module")
def grid8():
    return build_grid([[0.0, 1.0], [0.0, 1.0]], 8)


# --- fd_derivative -------------------------------------------------------------


def test_fd_polynomial_exactness():
    f = lambda t: (1 + t) ** 2
    assert fd_derivative(f, 1).value == pytest.approx(2.0, abs=1e-10)
    assert fd_derivative(f, 2).value == pytest.approx(2.0, abs=1e-10)


def test_fd_constant():
    assert fd_derivative(lambda t: 3.0, 1).value == 0.0
    assert fd_derivative(lambda t: 3.0, 2).value == 0.0


def test_fd_nan_is_stencil_error():
    with pytest.raises(StencilRangeError, match="smaller step"):
        fd_derivative(lambda t: np.nan if t > 0.005 else 1.0, 1)


def test_fd_spacelike_violation_is_stencil_error(euclid2, unit_square):
    # pushing along a timelike direction makes g = I - t^2 db db^T indefinite for large t
    e0 = np.array([1.0, 0, 0, 0])
    spec = general_variation(
        euclid2, lambda t, x: euclid2(x) + (t * bump(unit_square, x))[..., None] * e0, unit_square)
    grid = build_grid(unit_square, 4, euclid2)
    with pytest.raises(SpacelikeViolation):
        volume(euclid2, grid, spec, t=50.0)
    with pytest.raises(StencilRangeError):
        fd_derivative(lambda t: volume(euclid2, grid, spec, t), 1, h=50.0)


def test_fd_of_euclidean_volume_is_flat(euclid2, unit_square):
    grid = build_grid(unit_square, 16, euclid2)
    spec = admissible_lift(euclid2, one, unit_square)
    assert abs(fd_derivative(lambda t: volume(euclid2, grid, spec, t), 1).value) < 1e-8


# --- variation families -----------------------------------------------------------


def test_phi_must_vanish_at_zero(euclid2, unit_square):
    with pytest.raises(SpecError):
        make_characteristic_variation(euclid2, lambda t, x: 1.0 + t * one(x), unit_square)


def test_general_family_must_start_at_p(euclid2, unit_square):
    with pytest.raises(SpecError):
        general_variation(euclid2, lambda t, x: euclid2(x) + 1e-3, unit_square)


def test_t_squared_family(hs1, unit_square, grid8):
    spec = make_characteristic_variation(hs1, lambda t, x: t**2 * one(x), unit_square)
    X, Xdd = spec.fields(grid8.nodes)
    q = build_frame(hs1, grid8.nodes).q
    b = bump(unit_square, grid8.nodes)
    np.testing.assert_allclose(X, 0, atol=1e-12)
    np.testing.assert_allclose(Xdd, 2 * b[:, None] * q, atol=1e-8)
    assert first_variation_general(hs1, grid8, X) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("make", ["lift", "sin"])
def test_linear_families_fields(hs1, unit_square, grid8, make):
    phi0 = quad_phi([0.3, -1.0, 0.5, 0.2])
    if make == "lift":
        spec = admissible_lift(hs1, phi0, unit_square)
    else:
        spec = make_characteristic_variation(hs1, lambda t, x: np.sin(t) * phi0(x), unit_square)
    X, Xdd = spec.fields(grid8.nodes)
    q = build_frame(hs1, grid8.nodes).q
    psi = phi0(grid8.nodes) * bump(unit_square, grid8.nodes)
    np.testing.assert_allclose(X, psi[:, None] * q, atol=1e-8)
    np.testing.assert_allclose(Xdd, 0, atol=1e-8)
    assert volume(hs1, grid8, spec, 0.0) == pytest.approx(volume(hs1, grid8), abs=1e-12)


def test_sin_family_report_matches_lift(hs1, unit_square):
    grid = build_grid(unit_square, 12, hs1)
    phi0 = quad_phi([1.0, 0.2, -0.4, 0.0])
    sin_spec = make_characteristic_variation(hs1, lambda t, x: np.sin(t) * phi0(x), unit_square)
    rep = variation_report(hs1, grid, sin_spec)
    assert rep.rel_err_d1 < 1e-5 and rep.rel_err_d2 < 1e-4
    lift = variation_report(hs1, grid, admissible_lift(hs1, phi0, unit_square))
    assert rep.fd_d2 == pytest.approx(lift.fd_d2, abs=1e-6)


# --- first variation -------------------------------------------------------------


def test_first_variation_of_null_direction(euclid2, unit_square):
    grid = build_grid(unit_square, 8, euclid2)
    assert first_variation_general(euclid2, grid, lambda x: np.broadcast_to([-1.0, -1, 0, 0], x.shape[:-1] + (4,))) == pytest.approx(0.0, abs=1e-15)


def test_first_variation_radial_scaling(sphere2):
    box = np.array([[-0.5, 0.5], [-0.5, 0.5]])
    grid = build_grid(box, 16, sphere2)
    b = lambda x: bump(box, x)
    closed = first_variation_general(sphere2, grid, lambda x: b(x)[..., None] * sphere2(x))
    fr = build_frame(sphere2, grid.nodes)
    int_b = grid.integrate(b(grid.nodes) * np.sqrt(np.linalg.det(fr.g)))
    assert closed == pytest.approx(2 * int_b, rel=1e-12)
    spec = general_variation(sphere2, lambda t, x: (1 + t * b(x))[..., None] * sphere2(x), box)
    fd = fd_derivative(lambda t: volume(sphere2, grid, spec, t), 1).value
    assert abs(closed - fd) / max(1, abs(fd)) < 1e-5


def test_first_variation_admissible_examples(euclid2, sphere2):
    box = np.array([[-0.5, 0.5], [-0.5, 0.5]])
    grid = build_grid(box, 16)
    assert first_variation_admissible(euclid2, grid, quad_phi([1, 2, 3, 4])) == pytest.approx(0.0, abs=1e-14)
    assert first_variation_admissible(sphere2, grid, lambda x: 0.0 * one(x)) == 0.0
    fr = build_frame(sphere2, grid.nodes)
    int_b = grid.integrate(bump(box, grid.nodes) * np.sqrt(np.linalg.det(fr.g)))
    closed = first_variation_admissible(sphere2, grid, one)
    assert closed == pytest.approx(int_b, rel=1e-12)
    rep = variation_report(sphere2, grid, admissible_lift(sphere2, one, box))
    assert rep.rel_err_d1 < 1e-5
    assert abs(rep.fd_d1) > 0.1 * int_b


def test_scalar_flat_admissible_first_variation_vanishes(hs1, unit_square, grid8):
    X = admissible_lift(hs1, quad_phi([1, -1, 2, 0.5]), unit_square).fields(grid8.nodes)[0]
    assert abs(first_variation_general(hs1, grid8, X)) < 1e-9


# --- second variation ------------------------------------------------------------


def test_zero_variation(hs1, unit_square, grid8):
    spec = make_characteristic_variation(hs1, lambda t, x: 0.0 * t * one(x), unit_square)
    assert second_variation_general(hs1, grid8, spec) == 0.0


def test_euclidean_second_variation_vanishes(euclid2, unit_square):
    grid = build_grid(unit_square, 12, euclid2)
    phi0 = quad_phi([0.5, 1, -1, 2])
    assert second_variation_characteristic(euclid2, grid, phi0) == pytest.approx(0.0, abs=1e-15)
    rep = variation_report(euclid2, grid, admissible_lift(euclid2, phi0, unit_square))
    assert abs(rep.fd_d2) < 1e-5 and abs(rep.general_d2) < 1e-5


def test_hs_constant_window(hs1, unit_square):
    grid = build_grid(unit_square, 16, hs1)
    b = bump(unit_square, grid.nodes)
    dV = np.sqrt(np.linalg.det(build_frame(hs1, grid.nodes).g))
    expected = -0.5 * grid.integrate(b**2 * dV)
    closed = second_variation_characteristic(hs1, grid, one)
    assert closed < 0
    assert closed == pytest.approx(expected, rel=1e-10)
    rep = variation_report(hs1, grid, admissible_lift(hs1, one, unit_square))
    assert abs(rep.general_d2 - closed) < 1e-4
    assert abs(rep.fd_d2 - closed) < 1e-4
    assert rep.sign_check_d2


def test_round_sphere_gate(sphere2):
    grid = build_grid([[-0.5, 0.5], [-0.5, 0.5]], 4)
    with pytest.raises(SPrecondError):
        second_variation_characteristic(sphere2, grid, one)


@pytest.mark.parametrize("name", ["euclidean", "hyperbolic_sphere_product", "round_sphere"])
def test_termwise_reduction(name, rng):
    chart = builtin(name, 1 if name.startswith("hyper") else 2)
    box = np.array([[0.0, 1.0], [0.0, 1.0]]) if name != "round_sphere" else np.array([[-0.5, 0.5], [-0.5, 0.5]])
    grid = build_grid(box, 8, chart)
    spec = admissible_lift(chart, quad_phi(rng.uniform(-1, 1, 4)), box)
    terms = second_variation_terms(chart, grid, spec)
    # termwise: the cross term vanishes and the normal term is phi^2 tr(A^2) minus the trace term
    reduced = reduced_admissible_integrand(terms["frame"], terms["X"], terms["Xbar_dot"])
    assert np.max(np.abs(terms["integrand"] - reduced)) < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(min_value=-2, max_value=2), min_size=4, max_size=4))
def test_nonpositive_on_scalar_flat(coefs):
    chart = builtin("hyperbolic_sphere_product", 1)
    grid = build_grid([[0.0, 1.0], [0.0, 1.0]], 6, chart)
    assert second_variation_characteristic(chart, grid, quad_phi(coefs)) <= 1e-12


def test_general_family_report(hs1, unit_square):
    grid = build_grid(unit_square, 12, hs1)
    phi0 = quad_phi([1.0, 0.3, 0.0, -0.5])

    def F(t, x):
        fr = build_frame(hs1, x)
        return fr.p + (t * phi0(x) * bump(unit_square, x))[..., None] * (fr.p + fr.q)

    rep = variation_report(hs1, grid, general_variation(hs1, F, unit_square))
    assert rep.closed_form_d2 is None
    assert rep.rel_err_d1 < 1e-5 and rep.rel_err_general_d2 < 1e-4


def test_report_is_serializable(hs1, unit_square):
    import json

    grid = build_grid(unit_square, 6, hs1)
    rep = variation_report(hs1, grid, admissible_lift(hs1, one, unit_square), verbose=True)
    doc = json.loads(json.dumps(rep.to_dict()))
    assert len(doc["per_node"]["nodes"]) == 36
    assert np.isfinite(doc["rel_err_d1"])
