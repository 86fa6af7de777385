"""Fourth-order central finite-difference stencils in parameter space."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import FDStencilError

# 4th-order central first derivative at offsets -2, -1, 1, 2
D1_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
D1_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
# 4th-order central second derivative at offsets -2..2
D2_OFFSETS = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
D2_WEIGHTS = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def check_margin(x: np.ndarray, domain: np.ndarray | None, reach: float) -> None:
    """Raise FDStencilError unless every point is ``reach`` inside ``domain``."""
    if domain is None:
        return
    lo = domain[:, 0] + reach
    hi = domain[:, 1] - reach
    bad = np.any((x < lo - 1e-15) | (x > hi + 1e-15), axis=-1)
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        pt = np.atleast_2d(x.reshape(-1, x.shape[-1]))[idx[0] if idx.size else 0]
        raise FDStencilError(
            f"stencil of reach {reach:.3g} around {pt.tolist()} leaves the domain"
        )


def derivatives(
    f: Callable[[np.ndarray], np.ndarray],
    x,
    h: float,
    second: bool = True,
    domain: np.ndarray | None = None,
):
    """Value, gradient and Hessian of ``f`` by 4th-order central differences.

    ``f`` maps ``(..., n)`` parameter arrays to ``(..., *shape)`` outputs. All
    stencil points are evaluated in a single batched call.

    Returns:
      ``(value, d1, d2)`` with ``d1`` of shape ``(..., n, *shape)`` and ``d2``
      of shape ``(..., n, n, *shape)`` (``None`` when ``second`` is False).
      ``d2`` is exactly symmetric.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    check_margin(x, domain, 2.0 * h)
    eye = np.eye(n)

    shifts = [np.zeros(n)]
    for i in range(n):
        for a in D1_OFFSETS:
            shifts.append(a * h * eye[i])
    if second:
        for i in range(n):
            for j in range(i + 1, n):
                for a in D1_OFFSETS:
                    for b in D1_OFFSETS:
                        shifts.append(a * h * eye[i] + b * h * eye[j])
    shifts = np.array(shifts)
    pts = x[..., None, :] + shifts
    vals = np.asarray(f(pts), dtype=float)
    batch = x.shape[:-1]
    # move stencil axis first for readable indexing
    vals = np.moveaxis(vals, len(batch), 0)

    value = vals[0]
    ax = len(batch)
    k = 1
    first = []
    grads = []
    for i in range(n):
        block = vals[k:k + 4]
        k += 4
        first.append(block)
        grads.append(np.tensordot(D1_WEIGHTS, block, axes=1) / h)
    d1 = np.stack(grads, axis=ax)
    if not second:
        return value, d1, None

    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        block = first[i]
        # -f(-2h) + 16 f(-h) - 30 f(0) + 16 f(h) - f(2h)
        diag = (D2_WEIGHTS[0] * block[0] + D2_WEIGHTS[1] * block[1] + D2_WEIGHTS[2] * value
                + D2_WEIGHTS[3] * block[2] + D2_WEIGHTS[4] * block[3])
        rows[i][i] = diag / h**2
    w2 = np.outer(D1_WEIGHTS, D1_WEIGHTS).ravel()
    for i in range(n):
        for j in range(i + 1, n):
            block = vals[k:k + 16]
            k += 16
            mixed = np.tensordot(w2, block, axes=1) / h**2
            rows[i][j] = mixed
            rows[j][i] = mixed
    d2 = np.stack([np.stack(r, axis=ax) for r in rows], axis=ax)
    return value, d1, d2


def directional(f: Callable[[np.ndarray], np.ndarray], x, v, h: float,
                domain: np.ndarray | None = None) -> np.ndarray:
    """4th-order central derivative of ``f`` at ``x`` along parameter vector ``v``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    reach = 2.0 * h * np.max(np.abs(v))
    check_margin(x, domain, reach)
    pts = x[..., None, :] + D1_OFFSETS[:, None] * h * v[..., None, :]
    vals = np.asarray(f(pts), dtype=float)
    axis = x.ndim - 1
    vals = np.moveaxis(vals, axis, 0)
    return np.tensordot(D1_WEIGHTS, vals, axes=1) / h
