"""Pointwise geometry of a light-cone hypersurface.

Everything here is computed from the jets of ``p`` at parameter points:
the dual map ``q``, the second fundamental form, the shape operator
``A = g^{-1} h`` with ``h_ij = <d_i d_j p, q>``, the mean curvature vector
and the scalar curvature. ``intrinsic_oracle`` recomputes the curvature
from the metric alone (Christoffel symbols by finite differences) and
checks the Gauss equation against the extrinsic data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import stencil
from .chart import ImmersionChart, Jet2, eval_jet2, induced_metric, validate_spacelike
from .config import DEFAULT_TOLERANCES
from .errors import ConditioningWarning, DualUndefinedError
from .lorentz_core import completion_vector, inner, metric_signs, normal_null_space

__all__ = [
    "IntrinsicCurvatureReport",
    "PointFrame",
    "build_frame",
    "dual_derivative",
    "dual_map",
    "duality_residuals",
    "intrinsic_oracle",
    "mean_curvature_from_jets",
    "normal_projection",
    "riemann_tensor",
    "second_fundamental_form",
]


def dual_map(jet: Jet2, dual_tol: float = DEFAULT_TOLERANCES.dual_tol) -> np.ndarray:
    """The null normal ``q`` with ``<p, q> = 1`` and ``<d_i p, q> = 0``.

    With ``w`` a normal vector pairing non-trivially with ``p``,
    ``q = a p + b w`` where ``b = 1/<p,w>`` and ``a = -<w,w> / (2 <p,w>^2)``.
    """
    p = np.asarray(jet.value, dtype=float)
    basis = normal_null_space(jet.d1)
    w = completion_vector(basis, p)
    pw = np.asarray(inner(p, w))
    if np.any(np.abs(pw) < dual_tol):
        raise DualUndefinedError(
            f"normal plane is degenerate: |<p, w>| = {float(np.min(np.abs(pw))):.3e}"
        )
    ww = np.asarray(inner(w, w))
    b = 1.0 / pw
    a = -ww / (2.0 * pw**2)
    return a[..., None] * p + b[..., None] * w


def duality_residuals(jet: Jet2, q: np.ndarray) -> dict:
    """Max residuals of the three duality conditions over a batch."""
    p = jet.value
    return {
        "pq_minus_1": float(np.max(np.abs(np.asarray(inner(p, q)) - 1.0))),
        "qq": float(np.max(np.abs(inner(q, q)))),
        "dp_q": float(np.max(np.abs(inner(jet.d1, q[..., None, :])))),
    }


@dataclass(frozen=True)
class PointFrame:
    """Pointwise geometry at one parameter point (or a batch of them).

    ``onb[:, i]`` holds the chart components of the i-th orthonormal vector.
    """

    x: np.ndarray
    jet: Jet2
    g: np.ndarray
    g_inv: np.ndarray
    q: np.ndarray
    h: np.ndarray
    A: np.ndarray
    trA: np.ndarray
    trA2: np.ndarray
    S: np.ndarray
    H: np.ndarray
    onb: np.ndarray
    residuals: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.g.shape[-1]

    @property
    def p(self) -> np.ndarray:
        return self.jet.value

    def push(self, v) -> np.ndarray:
        """Ambient vector of the tangent vector with chart components ``v``."""
        return np.einsum("...i,...im->...m", np.asarray(v, dtype=float), self.jet.d1)

    def orthonormal_vectors(self) -> np.ndarray:
        """Ambient orthonormal frame, shape ``(..., n, m)`` (row i is e_i)."""
        return np.einsum("...ai,...am->...im", self.onb, self.jet.d1)

    def to_dict(self) -> dict:
        def conv(v):
            v = np.asarray(v)
            return v.tolist() if v.ndim else float(v)

        return {
            "x": conv(self.x), "p": conv(self.p), "q": conv(self.q), "g": conv(self.g),
            "g_inv": conv(self.g_inv), "h": conv(self.h), "A": conv(self.A),
            "trA": conv(self.trA), "trA2": conv(self.trA2), "S": conv(self.S),
            "H": conv(self.H), "onb": conv(self.onb), "residuals": self.residuals,
        }


def build_frame(chart: ImmersionChart, x, tol=DEFAULT_TOLERANCES, jet: Jet2 | None = None,
                backend: str | None = None) -> PointFrame:
    x = np.asarray(x, dtype=float)
    if jet is None:
        jet = eval_jet2(chart, x, backend=backend)
    g = validate_spacelike(chart, x, tol.pd_tol, jet=jet)
    n = g.shape[-1]
    q = dual_map(jet, tol.dual_tol)
    h = inner(jet.d2, q[..., None, None, :])
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    g_inv = np.linalg.inv(g)
    A = g_inv @ h
    trA = np.trace(A, axis1=-2, axis2=-1)
    trA2 = np.trace(A @ A, axis1=-2, axis2=-1)
    S = -2.0 * (n - 1) * trA
    H = trA[..., None] * jet.value - n * q
    # Gram-Schmidt in coordinate order == inverse transpose of the Cholesky factor
    L = np.linalg.cholesky(g)
    onb = np.swapaxes(np.linalg.inv(L), -1, -2)
    residuals = duality_residuals(jet, q)
    return PointFrame(x=x, jet=jet, g=g, g_inv=g_inv, q=q, h=h, A=A, trA=trA, trA2=trA2,
                      S=S, H=H, onb=onb, residuals=residuals)


def second_fundamental_form(frame: PointFrame, X, Y) -> np.ndarray:
    """``II(X, Y) = <AX, Y> p - <X, Y> q`` for chart-component tangents X, Y."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    axy = np.einsum("...ij,...i,...j->...", frame.h, X, Y)
    gxy = np.einsum("...ij,...i,...j->...", frame.g, X, Y)
    return axy[..., None] * frame.p - gxy[..., None] * frame.q


def normal_projection(frame: PointFrame, v) -> np.ndarray:
    """Remove the tangential part of ambient vectors ``v`` (..., m)."""
    v = np.asarray(v, dtype=float)
    coeff = inner(frame.jet.d1, v[..., None, :])
    tang = np.einsum("...ab,...a,...bm->...m", frame.g_inv, coeff, frame.jet.d1)
    return v - tang


def mean_curvature_from_jets(frame: PointFrame) -> np.ndarray:
    """``sum_ij g^ij (d_i d_j p)^perp``: the trace of II computed from raw jets."""
    hess = np.einsum("...ij,...ijm->...m", frame.g_inv, frame.jet.d2)
    return normal_projection(frame, hess)


def dual_derivative(chart: ImmersionChart, x, V, h: float | None = None) -> np.ndarray:
    """Finite-difference derivative of ``x -> q(x)`` along the chart vector ``V``."""
    step = chart.fd_step if h is None else h

    def q_of(pts):
        return dual_map(eval_jet2(chart, pts, second=False))

    return stencil.directional(q_of, x, V, step, domain=chart.domain)


@dataclass(frozen=True)
class IntrinsicCurvatureReport:
    S_intrinsic: float
    S_extrinsic: float
    gauss_residual: float
    riemann_samples: list
    max_sample_residual: float

    def to_dict(self) -> dict:
        return {
            "S_intrinsic": self.S_intrinsic,
            "S_extrinsic": self.S_extrinsic,
            "gauss_residual": self.gauss_residual,
            "max_sample_residual": self.max_sample_residual,
            "riemann_samples": self.riemann_samples,
        }


def riemann_tensor(g: np.ndarray, dg: np.ndarray, ddg: np.ndarray) -> np.ndarray:
    """``R^l_{ijk}`` with ``R(d_i, d_j) d_k = R^l_{ijk} d_l``.

    ``dg[a, i, j] = d_a g_ij`` and ``ddg[a, b, i, j] = d_a d_b g_ij``.
    """
    g_inv = np.linalg.inv(g)
    # Christoffel symbols of the first kind, Gamma_{m jk}
    gam1 = 0.5 * (np.einsum("jmk->mjk", dg) + np.einsum("kmj->mjk", dg) - dg)
    dgam1 = 0.5 * (np.einsum("ijmk->imjk", ddg) + np.einsum("ikmj->imjk", ddg)
                   - ddg)
    gam = np.einsum("lm,mjk->ljk", g_inv, gam1)
    dg_inv = -np.einsum("lp,ipq,qm->ilm", g_inv, dg, g_inv)
    dgam = (np.einsum("ilm,mjk->iljk", dg_inv, gam1)
            + np.einsum("lm,imjk->iljk", g_inv, dgam1))
    # dgam[i, l, j, k] = d_i Gamma^l_{jk}
    R = (np.einsum("iljk->lijk", dgam) - np.einsum("jlik->lijk", dgam)
         + np.einsum("lim,mjk->lijk", gam, gam) - np.einsum("ljm,mik->lijk", gam, gam))
    return R


def intrinsic_oracle(chart: ImmersionChart, x, samples: int = 8, seed: int = 0,
                     h: float | None = None, tol=DEFAULT_TOLERANCES) -> IntrinsicCurvatureReport:
    """Scalar curvature from the metric alone, compared with ``-2(n-1) tr A``.

    Also evaluates both sides of the Gauss equation
    ``<R(X,Y)Z,W> = -<X,W><AY,Z> - <AX,W><Y,Z> + <Y,W><AX,Z> + <AY,W><X,Z>``
    on random tangent quadruples.
    """
    x = np.asarray(x, dtype=float)
    step = chart.fd_step if h is None else h

    def metric_at(pts):
        return induced_metric(eval_jet2(chart, pts, second=False).d1)

    g, dg, ddg = stencil.derivatives(metric_at, x, step, second=True, domain=chart.domain)
    cond = np.linalg.cond(g)
    if cond > 1e8:
        warnings.warn(f"metric condition number {cond:.2e} at {x.tolist()}", ConditioningWarning,
                      stacklevel=2)
    R = riemann_tensor(g, dg, ddg)
    g_inv = np.linalg.inv(g)
    ric = np.einsum("iijk->jk", R)
    s_int = float(np.einsum("jk,jk->", g_inv, ric))

    frame = build_frame(chart, x, tol)
    s_ext = float(frame.S)
    Rlow = np.einsum("lm,lijk->mijk", frame.g, R)  # <R(d_i,d_j)d_k, d_m>

    rng = np.random.default_rng(seed)
    n = chart.n
    gm, hm = frame.g, frame.h
    rows = []
    worst = 0.0
    for _ in range(samples):
        X, Y, Z, W = rng.standard_normal((4, n))
        lhs = float(np.einsum("mijk,i,j,k,m->", Rlow, X, Y, Z, W))
        rhs = float(-(X @ gm @ W) * (Y @ hm @ Z) - (X @ hm @ W) * (Y @ gm @ Z)
                    + (Y @ gm @ W) * (X @ hm @ Z) + (Y @ hm @ W) * (X @ gm @ Z))
        worst = max(worst, abs(lhs - rhs))
        rows.append((X.tolist(), Y.tolist(), Z.tolist(), W.tolist(), lhs, rhs))
    return IntrinsicCurvatureReport(
        S_intrinsic=s_int, S_extrinsic=s_ext, gauss_residual=abs(s_int - s_ext),
        riemann_samples=rows, max_sample_residual=worst,
    )
