"""Chart catalog, jets and the spacelike check."""

from __future__ import annotations

import numpy as np
import pytest

from lightcone.chart import (
    BUILTIN_NAMES,
    ImmersionChart,
    builtin,
    chart_from_config,
    dual_chart,
    eval_jet2,
    validate_spacelike,
)
from lightcone.errors import ConfigError, DomainError, DualDegenerateError, FDStencilError, SpacelikeViolation
from lightcone.frame import build_frame
from lightcone.lorentz_core import inner

ALL_CASES = [("euclidean", 1), ("euclidean", 2), ("euclidean", 3),
             ("hyperbolic_sphere_product", 1), ("hyperbolic_sphere_product", 2),
             ("round_sphere", 1), ("round_sphere", 2), ("round_sphere", 3)]


def _interior(chart, count, rng, inset=0.1):
    span = chart.domain[:, 1] - chart.domain[:, 0]
    return rng.uniform(chart.domain[:, 0] + inset * span, chart.domain[:, 1] - inset * span,
                       size=(count, chart.n))


def test_euclidean_jet_at_origin(euclid2):
    jet = eval_jet2(euclid2, [0.0, 0.0])
    np.testing.assert_array_equal(jet.value, [0.5, -0.5, 0, 0])
    np.testing.assert_array_equal(jet.d1, [[0, 0, 1, 0], [0, 0, 0, 1]])
    for i in range(2):
        for j in range(2):
            d = float(i == j)
            np.testing.assert_array_equal(jet.d2[i, j], [d, d, 0, 0])


def test_euclidean_jet_off_origin(euclid2):
    jet = eval_jet2(euclid2, [1.0, 0.0])
    np.testing.assert_allclose(jet.value, [1, 0, 1, 0])
    np.testing.assert_allclose(jet.d1[0], [1, 1, 1, 0])
    fd = eval_jet2(euclid2, [1.0, 0.0], backend="fd")
    np.testing.assert_allclose(fd.d1, jet.d1, atol=1e-9)


def test_hs_product_origin(hs1):
    np.testing.assert_allclose(hs1([0.0, 0.0]), [1, 0, 1, 0], atol=1e-15)
    assert hs1.n == 2 and hs1.ambient_dim == 4


def test_round_sphere_north_pole(sphere2):
    np.testing.assert_allclose(sphere2([0.0, 0.0]), [1, 0, 0, 1], atol=1e-15)


@pytest.mark.parametrize("name,n", ALL_CASES)
def test_image_is_null(name, n, rng):
    chart = builtin(name, n)
    p = chart(_interior(chart, 200, rng, inset=0.0))
    assert np.max(np.abs(inner(p, p))) < 1e-10


@pytest.mark.parametrize("name,n", ALL_CASES)
def test_fd_jets_match_analytic(name, n, rng):
    chart = builtin(name, n)
    x = _interior(chart, 20, rng)
    exact = eval_jet2(chart, x, backend="analytic")
    fd = eval_jet2(chart, x, backend="fd")
    assert np.max(np.abs(fd.d1 - exact.d1)) < 1e-7
    assert np.max(np.abs(fd.d2 - exact.d2)) < 1e-7


@pytest.mark.parametrize("name,n", ALL_CASES)
def test_d2_exactly_symmetric(name, n, rng):
    chart = builtin(name, n)
    x = _interior(chart, 10, rng)
    for backend in ("analytic", "fd"):
        d2 = eval_jet2(chart, x, backend=backend).d2
        np.testing.assert_array_equal(d2, np.swapaxes(d2, 1, 2))


@pytest.mark.parametrize("name,n", ALL_CASES)
def test_metric_symmetric_positive(name, n, rng):
    chart = builtin(name, n)
    g = validate_spacelike(chart, _interior(chart, 50, rng))
    np.testing.assert_array_equal(g, np.swapaxes(g, -1, -2))
    assert np.min(np.linalg.eigvalsh(g)) > 0


def test_euclidean_metric_is_identity(euclid2, rng):
    g = validate_spacelike(euclid2, _interior(euclid2, 10, rng))
    np.testing.assert_allclose(g, np.broadcast_to(np.eye(2), g.shape), atol=1e-14)


def test_hs_metric_at_origin(hs1):
    np.testing.assert_allclose(validate_spacelike(hs1, [0.0, 0.0]), np.eye(2), atol=1e-14)


def test_null_curve_is_not_spacelike():
    chart = ImmersionChart(name="null_line", n=1, domain=np.array([[0.5, 2.0]]),
                           evaluator=lambda x: np.asarray(x)[..., :1] * np.array([1.0, 1.0, 0.0]))
    with pytest.raises(SpacelikeViolation) as info:
        validate_spacelike(chart, [1.0])
    assert abs(info.value.eigenvalue) < 1e-6


def test_outside_domain(euclid2):
    with pytest.raises(DomainError):
        eval_jet2(euclid2, [5.0, 0.0])


def test_fd_stencil_needs_margin(euclid2):
    with pytest.raises(FDStencilError):
        eval_jet2(euclid2, [2.0, 0.0], backend="fd")


def test_unknown_builtin():
    with pytest.raises(ConfigError):
        builtin("torus", 2)
    with pytest.raises(ConfigError):
        builtin("euclidean", 0)


def test_aliases_and_config():
    assert builtin("hs_product", 1).name == "hyperbolic_sphere_product"
    chart = chart_from_config({"name": "sphere", "n": 2})
    assert chart.name == "round_sphere"
    assert set(BUILTIN_NAMES) == {"euclidean", "hyperbolic_sphere_product", "round_sphere"}
    with pytest.raises(ConfigError):
        chart_from_config({"name": "euclidean"})


def test_dual_of_euclidean_is_degenerate(euclid2):
    with pytest.raises(DualDegenerateError):
        dual_chart(euclid2)


def test_dual_of_hs_product(hs1):
    dual = dual_chart(hs1)
    assert dual.jet_backend.startswith("finite_difference")
    np.testing.assert_allclose(dual([0.0, 0.0]), [-0.5, 0, 0.5, 0], atol=1e-12)
    fr = build_frame(dual, [[0.0, 0.0], [0.3, -0.4], [-1.0, 1.0]])
    assert np.max(np.abs(fr.S)) < 1e-6
