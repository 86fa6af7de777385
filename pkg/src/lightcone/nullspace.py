"""The extended ruled map ``Phi(t, x) = p(x) + t q(x)`` and its null-space.

Variations inside the null-space are pairs ``G = (tau, alpha)``: a fiber
displacement ``tau(t, x)`` and a reparametrization ``alpha(t, .)`` of the
base box. ``convert_null_variation`` turns one into the characteristic
family ``F = p + tau(t, beta(t, x)) q`` with ``beta(t, .)`` the inverse of
``alpha(t, .)``, which has the same volume function.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import stencil
from .chart import ImmersionChart, eval_jet2, induced_metric
from .config import DEFAULT_EPS, DEFAULT_TOLERANCES, TUBULAR_CAP, X_STEP_FRACTION
from .errors import DomainError, InversionError, SpecError, TubularRangeWarning
from .frame import dual_map
from .functional import VariationSpec, _volume_density, make_characteristic_variation
from .lorentz_core import inner
from .quadrature import QuadratureGrid, as_box

__all__ = [
    "BaseEmbedding",
    "NullVariation",
    "RuledMapSample",
    "convert_null_variation",
    "discover_delta",
    "embed_base",
    "invert_alpha",
    "null_metric",
    "ruled_map",
    "slice_radius",
    "volume_G",
    "volume_equality_check",
]


def _pq(chart: ImmersionChart, x) -> tuple[np.ndarray, np.ndarray]:
    jet = eval_jet2(chart, x, second=False)
    return jet.value, dual_map(jet)


def phi_value(chart: ImmersionChart, t, x) -> np.ndarray:
    """``Phi(t, x) = p(x) + t q(x)``; ``t`` broadcasts against the batch of x."""
    p, q = _pq(chart, x)
    return p + np.asarray(t, dtype=float)[..., None] * q


def slice_radius(chart: ImmersionChart, t, x) -> np.ndarray:
    """``<Phi(t,x), Phi(t,x)>``, equal to ``2t`` on every slice."""
    return inner(phi_value(chart, t, x), phi_value(chart, t, x))


@dataclass(frozen=True)
class RuledMapSample:
    t: float
    x: np.ndarray
    point: np.ndarray
    g_N: np.ndarray
    kernel_residual: float
    radius2: float

    @property
    def x_block(self) -> np.ndarray:
        return self.g_N[1:, 1:]

    def to_dict(self) -> dict:
        return {"t": self.t, "x": self.x.tolist(), "point": self.point.tolist(),
                "g_N": self.g_N.tolist(), "kernel_residual": self.kernel_residual,
                "radius2": self.radius2}


def null_metric(chart: ImmersionChart, t: float, x, h: float | None = None) -> np.ndarray:
    """Pullback metric of ``Phi`` in coordinates ``(t, x^1, ..., x^n)``.

    Derivatives of ``Phi`` come from finite differences in all n+1 variables.
    """
    x = np.asarray(x, dtype=float)
    step = chart.fd_step if h is None else h
    y = np.concatenate([np.full(x.shape[:-1] + (1,), float(t)), x], axis=-1)
    domain = np.vstack([[-np.inf, np.inf], chart.domain])
    _, d1, _ = stencil.derivatives(lambda yy: phi_value(chart, yy[..., 0], yy[..., 1:]), y, step,
                                   second=False, domain=domain)
    return induced_metric(d1)


def ruled_map(chart: ImmersionChart, t: float, x, cap: float = TUBULAR_CAP,
              tol=DEFAULT_TOLERANCES) -> RuledMapSample:
    """Sample of the extended ruled map at one ``(t, x)``.

    Emits TubularRangeWarning when the x-block of ``g_N`` stops being positive
    definite (the map left the tubular neighborhood where it is an immersion).
    """
    if abs(t) > cap:
        raise DomainError(f"|t| = {abs(t):g} exceeds the tubular cap {cap:g}")
    x = np.asarray(x, dtype=float)
    gN = null_metric(chart, t, x)
    point = phi_value(chart, t, x)
    kernel = float(np.linalg.norm(gN[..., :, 0]))
    if np.linalg.eigvalsh(gN[1:, 1:])[0] <= tol.pd_tol:
        warnings.warn(f"ruled map degenerates along the base at t={t:g}, x={x.tolist()}",
                      TubularRangeWarning, stacklevel=2)
    return RuledMapSample(t=float(t), x=x, point=point, g_N=gN, kernel_residual=kernel,
                          radius2=float(inner(point, point)))


class BaseEmbedding:
    """``iota: x -> (0, x)``, the base manifold as the zero slice of N."""

    def __init__(self, chart: ImmersionChart):
        self.chart = chart

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([np.zeros(x.shape[:-1] + (1,)), x], axis=-1)

    def pullback_metric(self, x) -> np.ndarray:
        """Metric induced on the base through ``Phi o iota``."""
        return null_metric(self.chart, 0.0, x)[..., 1:, 1:]


def embed_base(chart: ImmersionChart) -> BaseEmbedding:
    return BaseEmbedding(chart)


@dataclass(frozen=True)
class NullVariation:
    """``G(t, x) = (tau(t, x), alpha(t, x))`` with ``G(0, x) = (0, x)``."""

    tau: Callable
    alpha: Callable
    eps: float = DEFAULT_EPS

    def validate(self, box, samples: int = 5, collar: float = 1e-3) -> None:
        box = as_box(box)
        n = box.shape[0]
        axes = [np.linspace(a, b, samples + 2)[1:-1] for a, b in box]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        if np.max(np.abs(self.tau(0.0, pts))) > 1e-14:
            raise SpecError("tau(0, x) must vanish")
        if np.max(np.abs(self.alpha(0.0, pts) - pts)) > 1e-14:
            raise SpecError("alpha(0, .) must be the identity")
        # points on a thin collar inside each face
        width = collar * (box[:, 1] - box[:, 0])
        rim = []
        for k in range(n):
            for edge in (box[k, 0] + 0.5 * width[k], box[k, 1] - 0.5 * width[k]):
                face = pts.copy()
                face[:, k] = edge
                rim.append(face)
        rim = np.concatenate(rim)
        for t in np.linspace(-self.eps, self.eps, 5):
            if np.max(np.abs(self.alpha(t, rim) - rim)) > 1e-12:
                raise SpecError(f"alpha(t, .) does not fix the boundary collar at t={t:g}")


def _alpha_jacobian(alpha: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    n = y.shape[-1]
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        cols.append((alpha(t, y + e) - alpha(t, y - e)) / (2 * h))
    return np.stack(cols, axis=-1)  # J[..., i, k] = d alpha^i / d y^k


def invert_alpha(alpha: Callable, t: float, x, box, max_iter: int = 50, tol: float = 1e-12):
    """``beta(t, x)``: solve ``alpha(t, y) = x`` by damped Newton seeded at ``x``.

    Returns ``(beta, converged)`` with ``converged`` a boolean array over the
    batch. Steps are halved until the residual decreases; iterates are kept
    inside the box.
    """
    box = as_box(box)
    x = np.asarray(x, dtype=float)
    y = x.copy()
    h = 1e-6 * float(np.min(box[:, 1] - box[:, 0]))
    res = alpha(t, y) - x
    rnorm = np.linalg.norm(res, axis=-1)
    done = rnorm <= tol
    for _ in range(max_iter):
        if np.all(done):
            break
        J = _alpha_jacobian(alpha, t, y, h)
        try:
            step = np.linalg.solve(J, -res[..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
        lam = np.ones(y.shape[:-1])
        active = ~done
        for _ in range(30):
            trial = np.clip(y + lam[..., None] * step, box[:, 0], box[:, 1])
            tres = alpha(t, trial) - x
            tnorm = np.linalg.norm(tres, axis=-1)
            accept = (tnorm < rnorm) | (tnorm <= tol)
            if np.all(accept | ~active):
                break
            lam = np.where(accept | ~active, lam, 0.5 * lam)
        y = np.where(active[..., None], trial, y)
        res = np.where(active[..., None], tres, res)
        rnorm = np.where(active, tnorm, rnorm)
        done = rnorm <= tol
    return y, done


def discover_delta(chart: ImmersionChart, nv: NullVariation, box, points,
                   steps: int = 20, max_iter: int = 50, tol: float = 1e-12) -> float:
    """Largest sampled ``delta <= eps`` for which inversion succeeds at ``+-delta``.

    Bisection on the success predicate; success at eps short-circuits.
    """
    points = np.asarray(points, dtype=float)

    def ok(t):
        for s in (t, -t):
            _, conv = invert_alpha(nv.alpha, s, points, box, max_iter, tol)
            if not np.all(conv):
                return False
        return True

    if ok(nv.eps):
        return float(nv.eps)
    lo, hi = 0.0, float(nv.eps)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise InversionError("no t-range found on which alpha(t, .) can be inverted", t=hi)
    return lo


def convert_null_variation(chart: ImmersionChart, nv: NullVariation, box, points=None,
                           max_iter: int = 50, tol: float = 1e-12) -> VariationSpec:
    """Characteristic family ``F = p + tau(t, beta(t, x)) q`` on ``(-delta, delta)``.

    ``delta`` is discovered on ``points`` (default: a small interior lattice)
    and stored as the spec's ``eps``. The family is not re-windowed: ``tau``
    already vanishes near the boundary.
    """
    box = as_box(box)
    nv.validate(box)
    if points is None:
        axes = [np.linspace(a, b, 7)[1:-1] for a, b in box]
        points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.shape[0])
    delta = discover_delta(chart, nv, box, points, max_iter=max_iter, tol=tol)

    def phi(t, x):
        if t == 0.0:
            return np.asarray(nv.tau(0.0, x), dtype=float)
        beta, conv = invert_alpha(nv.alpha, t, x, box, max_iter, tol)
        if not np.all(conv):
            bad = np.asarray(x).reshape(-1, box.shape[0])[int(np.argmin(conv.reshape(-1)))]
            raise InversionError(f"Newton inversion failed at t={t:g}, x={bad.tolist()}",
                                 t=t, x=bad.tolist())
        return nv.tau(t, beta)

    return make_characteristic_variation(chart, phi, box, eps=delta, windowed=False,
                                         label="converted null variation")


def volume_G(chart: ImmersionChart, nv: NullVariation, grid: QuadratureGrid, t: float,
             tol=DEFAULT_TOLERANCES) -> float:
    """Volume of ``x -> Phi(tau(t, x), alpha(t, x))`` by FD jets in x."""
    h = X_STEP_FRACTION * float(np.min(grid.box[:, 1] - grid.box[:, 0]))

    def mapped(x):
        return phi_value(chart, nv.tau(t, x), nv.alpha(t, x))

    _, d1, _ = stencil.derivatives(mapped, grid.nodes, h, second=False, domain=chart.domain)
    return grid.integrate(_volume_density(d1, grid.nodes, tol.pd_tol))


def volume_equality_check(chart: ImmersionChart, nv: NullVariation, spec: VariationSpec,
                          grid: QuadratureGrid, ts, tol=DEFAULT_TOLERANCES) -> dict:
    """Compare ``Vol_F(t)`` of the converted family with ``Vol_G(t)``."""
    from .functional import volume

    rows = []
    for t in ts:
        vf = volume(chart, grid, spec, float(t), tol)
        vg = volume_G(chart, nv, grid, float(t), tol)
        rows.append({"t": float(t), "vol_F": vf, "vol_G": vg, "diff": abs(vf - vg)})
    return {"delta": spec.eps, "samples": rows,
            "max_abs_diff": max(r["diff"] for r in rows) if rows else 0.0}
