"""Tensor-product Gauss-Legendre grids and the fixed-boundary bump window."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .lorentz_core import pairwise_sum


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    box: np.ndarray

    @property
    def n(self) -> int:
        return self.box.shape[0]

    @property
    def box_volume(self) -> float:
        return float(np.prod(self.box[:, 1] - self.box[:, 0]))

    def integrate(self, values) -> float:
        """Quadrature of per-node values (deterministic pairwise sum)."""
        return pairwise_sum(self.weights * np.asarray(values, dtype=float))


def as_box(box) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2 or np.any(box[:, 1] <= box[:, 0]):
        raise ConfigError(f"box must be a list of [a, b] intervals with a < b, got {box.tolist()}")
    return box


def build_grid(box, order: int, chart=None) -> QuadratureGrid:
    """Gauss-Legendre nodes and weights on a box.

    When ``chart`` is given, the box must sit inside its domain with room for
    the finite-difference stencils used around each node.
    """
    if int(order) != order or order < 2:
        raise ConfigError(f"quadrature order must be an integer >= 2, got {order}")
    order = int(order)
    box = as_box(box)
    if chart is not None:
        if box.shape[0] != chart.n:
            raise DomainError(f"box has {box.shape[0]} axes but chart {chart.name} has {chart.n}")
        margin = 2.0 * chart.fd_step
        if np.any(box[:, 0] < chart.domain[:, 0] + margin) or np.any(box[:, 1] > chart.domain[:, 1] - margin):
            raise DomainError(f"box {box.tolist()} is not inside the domain of {chart.name} "
                              f"with FD margin {margin:g}")
    t, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (box[:, 1] - box[:, 0])
    mid = 0.5 * (box[:, 1] + box[:, 0])
    axes = [mid[k] + half[k] * t for k in range(box.shape[0])]
    wts = [half[k] * w for k in range(box.shape[0])]
    nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.shape[0])
    weights = np.ones(1)
    for wk in wts:
        weights = np.multiply.outer(weights, wk)
    return QuadratureGrid(nodes=np.ascontiguousarray(nodes), weights=weights.reshape(-1),
                          order=order, box=box)


def bump(box, x) -> np.ndarray:
    """Smooth window ``prod_i exp(1 - 1/(1 - u_i^2))``, zero outside the box.

    ``u_i`` is the coordinate rescaled so the box becomes ``(-1, 1)^n``; the
    window equals 1 at the center and vanishes with all derivatives on the
    boundary.
    """
    box = as_box(box)
    x = np.asarray(x, dtype=float)
    u = (2.0 * x - (box[:, 0] + box[:, 1])) / (box[:, 1] - box[:, 0])
    inside = np.abs(u) < 1.0
    denom = np.where(inside, 1.0 - u * u, 1.0)
    vals = np.where(inside, np.exp(1.0 - 1.0 / denom), 0.0)
    return np.prod(vals, axis=-1)
