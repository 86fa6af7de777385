"""Dual map, shape operator, curvatures and the intrinsic oracle."""

from __future__ import annotations

import numpy as np
import pytest

from lightcone.chart import Jet2, builtin, eval_jet2
from lightcone.errors import DualUndefinedError
from lightcone.frame import (
    build_frame,
    dual_derivative,
    dual_map,
    intrinsic_oracle,
    mean_curvature_from_jets,
    second_fundamental_form,
)
from lightcone.lorentz_core import inner

CASES = [("euclidean", 2), ("euclidean", 3), ("hyperbolic_sphere_product", 1),
         ("hyperbolic_sphere_product", 2), ("round_sphere", 2), ("round_sphere", 3)]


def _points(chart, count, rng, inset=0.15):
    span = chart.domain[:, 1] - chart.domain[:, 0]
    return rng.uniform(chart.domain[:, 0] + inset * span, chart.domain[:, 1] - inset * span,
                       size=(count, chart.n))


def _solve_dual(jet):
    """Independent oracle: the linear conditions leave a line, the null one picks a point."""
    p, d1 = jet.value, jet.d1
    eta = np.diag([-1.0] + [1.0] * (p.size - 1))
    rows = np.vstack([d1 @ eta, (eta @ p)[None, :]])
    rhs = np.concatenate([np.zeros(len(d1)), [1.0]])
    q0, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    k = np.linalg.svd(rows)[2][-1]
    # <q0 + s k, q0 + s k> = 0
    roots = np.roots([inner(k, k), 2 * inner(q0, k), inner(q0, q0)])
    cands = [q0 + s.real * k for s in roots] if abs(inner(k, k)) > 1e-14 else [q0 - inner(q0, q0) / (2 * inner(q0, k)) * k]
    return cands


def test_euclidean_dual_is_constant(euclid2, rng):
    q = dual_map(eval_jet2(euclid2, _points(euclid2, 50, rng)))
    np.testing.assert_allclose(q, np.broadcast_to([-1, -1, 0, 0], q.shape), atol=1e-12)


def test_hs_dual_at_origin(hs1):
    q = dual_map(eval_jet2(hs1, [0.0, 0.0]))
    np.testing.assert_allclose(q, [-0.5, 0, 0.5, 0], atol=1e-14)


def test_hs_dual_is_half_reflection(hs1, rng):
    x = _points(hs1, 50, rng)
    p = hs1(x)
    q = dual_map(eval_jet2(hs1, x))
    expected = 0.5 * np.concatenate([-p[:, :2], p[:, 2:]], axis=1)
    np.testing.assert_allclose(q, expected, atol=1e-12)


def test_round_sphere_north_pole_dual(sphere2):
    jet = eval_jet2(sphere2, [0.0, 0.0])
    q = dual_map(jet)
    np.testing.assert_allclose(q, [-0.5, 0, 0, 0.5], atol=1e-14)
    assert min(np.max(np.abs(q - c)) for c in _solve_dual(jet)) < 1e-12


@pytest.mark.parametrize("name,n", CASES)
def test_dual_matches_independent_solve(name, n, rng):
    chart = builtin(name, n)
    for x in _points(chart, 5, rng):
        jet = eval_jet2(chart, x)
        q = dual_map(jet)
        assert min(np.max(np.abs(q - c)) for c in _solve_dual(jet)) < 1e-10


def test_dual_undefined_when_plane_is_degenerate():
    jet = Jet2(value=np.array([1.0, 1.0, 0, 0]),
               d1=np.array([[0, 0, 1.0, 0], [1.0, 1.0, 0, 0]]))
    with pytest.raises(DualUndefinedError):
        dual_map(jet)


@pytest.mark.parametrize("name,n", CASES)
def test_frame_invariants(name, n, rng):
    chart = builtin(name, n)
    fr = build_frame(chart, _points(chart, 30, rng))
    assert max(fr.residuals.values()) < 1e-9
    np.testing.assert_allclose(fr.g @ fr.A, fr.h, atol=1e-12)
    np.testing.assert_allclose(fr.S, -2 * (fr.n - 1) * fr.trA, atol=1e-12)
    np.testing.assert_allclose(fr.H, fr.trA[:, None] * fr.p - fr.n * fr.q, atol=1e-12)
    gram = np.swapaxes(fr.onb, -1, -2) @ fr.g @ fr.onb
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(fr.n), gram.shape), atol=1e-12)
    # mean curvature from raw second derivatives
    assert np.max(np.abs(mean_curvature_from_jets(fr) - fr.H)) < 1e-7


def test_euclidean_frame(euclid2):
    fr = build_frame(euclid2, [0.4, -0.7])
    np.testing.assert_allclose(fr.A, 0, atol=1e-14)
    assert fr.S == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(fr.H, [2, 2, 0, 0], atol=1e-14)


def test_hs_shape_operator(hs1):
    fr = build_frame(hs1, [0.0, 0.0])
    np.testing.assert_allclose(fr.A, np.diag([0.5, -0.5]), atol=1e-14)
    assert fr.trA2 == pytest.approx(0.5, abs=1e-14)


def test_round_sphere_curvature(sphere2):
    fr = build_frame(sphere2, [0.2, 0.3])
    np.testing.assert_allclose(fr.A, -0.5 * np.eye(2), atol=1e-13)
    assert fr.S == pytest.approx(2.0, abs=1e-12)


def test_second_fundamental_form(euclid2, hs1):
    fr = build_frame(euclid2, [0.0, 0.0])
    np.testing.assert_allclose(second_fundamental_form(fr, [1, 0], [1, 0]), [1, 1, 0, 0], atol=1e-14)
    np.testing.assert_allclose(second_fundamental_form(fr, [0, 0], [1, 0]), 0, atol=1e-15)
    # symmetric and equal to the normal part of the Hessian
    fr = build_frame(hs1, [0.3, 0.5])
    X, Y = np.array([0.7, -0.2]), np.array([0.1, 0.9])
    np.testing.assert_allclose(second_fundamental_form(fr, X, Y), second_fundamental_form(fr, Y, X), atol=1e-14)


@pytest.mark.parametrize("name,n", CASES)
def test_dual_derivative_is_minus_shape_operator(name, n, rng):
    chart = builtin(name, n)
    for x in _points(chart, 10, rng):
        V = rng.normal(size=chart.n)
        fr = build_frame(chart, x)
        assert np.linalg.norm(dual_derivative(chart, x, V) + fr.push(fr.A @ V)) < 1e-6


def test_euclidean_dual_derivative_vanishes(euclid2):
    np.testing.assert_allclose(dual_derivative(euclid2, [0.1, 0.2], [1.0, -1.0]), 0, atol=1e-10)


def test_intrinsic_oracle_examples(euclid2, hs1, sphere2):
    rep = intrinsic_oracle(euclid2, [0.3, -0.2])
    assert abs(rep.S_intrinsic) < 1e-6 and rep.gauss_residual < 1e-6
    rep = intrinsic_oracle(hs1, [0.4, 0.1])
    assert abs(rep.S_intrinsic) < 1e-6
    rep = intrinsic_oracle(sphere2, [0.3, 0.4])
    assert rep.S_intrinsic == pytest.approx(2.0, abs=1e-5)
    assert rep.max_sample_residual < 1e-5


@pytest.mark.parametrize("name,n", CASES)
def test_gauss_identity(name, n, rng):
    chart = builtin(name, n)
    x = _points(chart, 1, rng, inset=0.25)[0]
    rep = intrinsic_oracle(chart, x)
    assert rep.gauss_residual < 1e-5
    assert rep.max_sample_residual < 1e-5
