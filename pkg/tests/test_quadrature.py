"""Gauss-Legendre grids and the bump window."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightcone.errors import ConfigError, DomainError
from lightcone.functional import volume
from lightcone.quadrature import build_grid, bump


def test_order_two_unit_square(unit_square):
    grid = build_grid(unit_square, 2)
    assert grid.nodes.shape == (4, 2)
    assert grid.weights.sum() == pytest.approx(1.0, abs=1e-15)


def test_monomial_x2y2(unit_square):
    grid = build_grid(unit_square, 4)
    x, y = grid.nodes.T
    assert grid.integrate(x**2 * y**2) == pytest.approx(1 / 9, abs=1e-14)


@pytest.mark.parametrize("order", [0, 1, 2.5])
def test_bad_order(unit_square, order):
    with pytest.raises(ConfigError):
        build_grid(unit_square, order)


def test_box_must_fit_chart(euclid2):
    with pytest.raises(DomainError):
        build_grid([[0.0, 3.0], [0.0, 1.0]], 4, euclid2)
    with pytest.raises(ConfigError):
        build_grid([[1.0, 0.0], [0.0, 1.0]], 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=30),
       st.integers(min_value=0, max_value=30))
def test_exact_up_to_degree(order, a, b):
    """Degree 2*order - 1 per axis is integrated exactly."""
    a, b = a % (2 * order), b % (2 * order)
    box = np.array([[-0.5, 1.0], [0.2, 0.7]])
    grid = build_grid(box, order)
    x, y = grid.nodes.T
    exact = ((1.0 ** (a + 1) - (-0.5) ** (a + 1)) / (a + 1)) * ((0.7 ** (b + 1) - 0.2 ** (b + 1)) / (b + 1))
    assert grid.integrate(x**a * y**b) == pytest.approx(exact, rel=1e-12, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=3), st.integers(min_value=2, max_value=8))
def test_weights_sum_to_box_volume(n, order):
    box = np.array([[0.0, 1.5], [-1.0, 1.0], [0.2, 0.3]])[:n]
    grid = build_grid(box, order)
    assert grid.weights.sum() == pytest.approx(grid.box_volume, rel=1e-12)
    assert np.all(grid.weights > 0)


def test_bump_window(unit_square):
    assert bump(unit_square, [0.5, 0.5]) == pytest.approx(1.0)
    np.testing.assert_array_equal(bump(unit_square, [[0.0, 0.5], [1.2, 0.5], [0.5, 1.0]]), 0.0)
    # flat to all orders at the edge: tiny well before the boundary
    assert bump(unit_square, [0.001, 0.5]) < 1e-100


def test_unit_square_volumes(euclid2, hs1, unit_square):
    grid = build_grid(unit_square, 16, euclid2)
    assert volume(euclid2, grid) == pytest.approx(1.0, abs=1e-12)
    assert volume(hs1, build_grid(unit_square, 16, hs1)) == pytest.approx(1.0, abs=1e-12)
