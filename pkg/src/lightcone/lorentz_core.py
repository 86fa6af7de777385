"""Signature-aware linear algebra over Minkowski space R^{n+2}_1.

Vectors are numpy arrays whose last axis holds the ambient coordinates,
index 0 being the timelike one. Every function broadcasts over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTangentError, DimensionError

__all__ = [
    "NormalPlaneBasis",
    "as_ambient",
    "inner",
    "metric_signs",
    "normal_plane",
    "normal_null_space",
    "pairwise_sum",
]


def metric_signs(dim: int) -> np.ndarray:
    """Diagonal of the Minkowski metric, ``(-1, 1, ..., 1)``."""
    eta = np.ones(dim)
    eta[0] = -1.0
    return eta


def as_ambient(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0 or v.shape[-1] < 2:
        raise DimensionError(f"ambient vectors need at least 2 coordinates, got shape {v.shape}")
    return v


def inner(u, v) -> np.ndarray | float:
    """Lorentzian inner product ``-u0 v0 + sum_k uk vk`` along the last axis."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[-1:] != v.shape[-1:]:
        raise DimensionError(f"dimension mismatch: {u.shape[-1:]} vs {v.shape[-1:]}")
    out = np.einsum("...k,...k->...", u, v) - 2.0 * u[..., 0] * v[..., 0]
    return float(out) if np.ndim(out) == 0 else out


def pairwise_sum(values) -> float:
    """Deterministic reduction of a 1-D array.

    numpy reduces contiguous float arrays with pairwise summation in a fixed
    order, so repeated runs give bit-identical results.
    """
    arr = np.ascontiguousarray(np.asarray(values, dtype=float).ravel())
    return float(np.add.reduce(arr))


@dataclass(frozen=True)
class NormalPlaneBasis:
    v1: np.ndarray
    v2: np.ndarray
    tangent_residual: float


def normal_null_space(tangents: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Euclidean-orthonormal basis of the Lorentz-orthogonal complement.

    Args:
      tangents: array ``(..., n, m)`` of tangent vectors.
      rank_tol: relative singular-value threshold for rank deficiency.

    Returns:
      Array ``(..., m - n, m)`` whose rows span the vectors ``v`` with
      ``<v, t_i> = 0`` for every tangent ``t_i``.

    Raises:
      DegenerateTangentError: if the tangents do not have full rank n.
    """
    tangents = np.asarray(tangents, dtype=float)
    n, m = tangents.shape[-2:]
    if n >= m:
        raise DimensionError(f"{n} tangents cannot have a normal plane in dimension {m}")
    # <v, t> = (eta t) . v, so the complement is the null space of the
    # eta-flipped tangent matrix
    lowered = tangents * metric_signs(m)
    _, sv, vh = np.linalg.svd(lowered, full_matrices=True)
    smin = sv[..., -1]
    smax = sv[..., 0]
    if np.any(smin <= rank_tol * np.maximum(smax, 1e-300)):
        raise DegenerateTangentError(
            f"tangent set is rank deficient (min singular value {float(np.min(smin)):.3e})"
        )
    return vh[..., n:, :]


def normal_plane(tangents, p, rank_tol: float = 1e-10) -> NormalPlaneBasis:
    """Basis ``{p, w}`` of the normal plane of a codimension-2 spacelike immersion.

    ``w`` is the combination of the orthogonal-complement basis that pairs
    most strongly with ``p``, so ``<p, w>`` is bounded away from zero whenever
    the plane is Lorentzian.
    """
    tangents = np.atleast_2d(np.asarray(tangents, dtype=float))
    p = as_ambient(p)
    if tangents.shape[-1] != p.shape[-1]:
        raise DimensionError("tangents and p live in different ambient dimensions")
    if tangents.shape[-1] - tangents.shape[-2] != 2:
        raise DimensionError("normal_plane expects n tangents in dimension n + 2")
    basis = normal_null_space(tangents, rank_tol)
    w = completion_vector(basis, p)
    res = max(
        float(np.max(np.abs(inner(tangents, p)))),
        float(np.max(np.abs(inner(tangents, w)))),
    )
    return NormalPlaneBasis(v1=p.copy(), v2=w, tangent_residual=res)


def completion_vector(basis: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``w = sum_k <p, n_k> n_k`` for a 2-row complement basis ``n_k``."""
    coeffs = inner(basis, p[..., None, :])
    return np.einsum("...k,...km->...m", coeffs, basis)
