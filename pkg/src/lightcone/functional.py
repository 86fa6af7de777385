"""Volume functional, variation families and their closed-form derivatives.

Closed forms evaluate pointwise frame data on a Gauss-Legendre grid. The
oracle side differentiates ``Vol(t)`` numerically in ``t`` (Richardson
extrapolated central differences), with ``Vol(t)`` itself built from
finite-difference jets of ``F(t, .)``. The two sides share no derivative code.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import stencil
from .chart import ImmersionChart, _require_positive, eval_jet2, induced_metric
from .config import DEFAULT_EPS, DEFAULT_TOLERANCES, T_STEP_FRACTION, X_STEP_FRACTION
from .errors import ConfigError, SPrecondError, SpacelikeViolation, SpecError, StencilRangeError
from .frame import PointFrame, build_frame, dual_map
from .lorentz_core import inner
from .parallel import map_nodes
from .quadrature import QuadratureGrid, as_box, bump

__all__ = [
    "FDResult",
    "VariationReport",
    "VariationSpec",
    "admissible_lift",
    "fd_derivative",
    "fd_derivatives",
    "first_variation_admissible",
    "first_variation_general",
    "general_variation",
    "make_characteristic_variation",
    "reduced_admissible_integrand",
    "second_variation_characteristic",
    "second_variation_general",
    "second_variation_terms",
    "variation_report",
    "volume",
]

KINDS = ("characteristic", "admissible_lift", "general")


class FDResult(NamedTuple):
    value: float
    error: float


def _richardson(f, order: int, h: float) -> tuple:
    """Central difference at steps h and h/2, one Richardson level.

    ``f`` is called on the array of stencil offsets; works for scalar- and
    array-valued ``f`` whose first axis is the offset.
    """
    ts = np.array([-h, -h / 2, 0.0, h / 2, h])
    v = f(ts)
    if order == 1:
        coarse = (v[4] - v[0]) / (2 * h)
        fine = (v[3] - v[1]) / h
    elif order == 2:
        coarse = (v[4] - 2 * v[2] + v[0]) / h**2
        fine = (v[3] - 2 * v[2] + v[1]) / (h / 2) ** 2
    else:
        raise ConfigError(f"derivative order must be 1 or 2, got {order}")
    best = (4.0 * fine - coarse) / 3.0
    return best, np.abs(best - fine)


def _volume_sweep(vol_fn: Callable[[float], float], ts, h: float) -> np.ndarray:
    out = []
    for t in ts:
        try:
            v = float(vol_fn(float(t)))
        except SpacelikeViolation as exc:
            raise StencilRangeError(
                f"volume undefined at t={t:g} ({exc}); try a smaller step than h={h:g}"
            ) from exc
        if not np.isfinite(v):
            raise StencilRangeError(f"volume is not finite at t={t:g}; try a smaller step than h={h:g}")
        out.append(v)
    return np.array(out)


def fd_derivative(vol_fn: Callable[[float], float], order: int, h: float = T_STEP_FRACTION * DEFAULT_EPS) -> FDResult:
    """Richardson-extrapolated central derivative of ``vol_fn`` at 0."""
    best, err = _richardson(lambda ts: _volume_sweep(vol_fn, ts, h), order, h)
    return FDResult(float(best), float(err))


def fd_derivatives(vol_fn: Callable[[float], float], h: float) -> tuple[FDResult, FDResult]:
    """First and second derivatives from one shared five-point sweep."""
    cache = {}

    def sweep(ts):
        if "v" not in cache:
            cache["v"] = _volume_sweep(vol_fn, ts, h)
        return cache["v"]

    d1 = _richardson(sweep, 1, h)
    d2 = _richardson(sweep, 2, h)
    return FDResult(float(d1[0]), float(d1[1])), FDResult(float(d2[0]), float(d2[1]))


@dataclass(frozen=True)
class VariationSpec:
    """A variation family ``F(t, .)`` of the chart over ``box``.

    ``characteristic`` / ``admissible_lift``: ``F = p + phi(t, x) b(x) q(x)``
    with ``b`` the bump window of ``box`` (or 1 when ``windowed`` is False).
    ``general``: ``F`` supplied directly.
    """

    kind: str
    chart: ImmersionChart
    box: np.ndarray
    eps: float = DEFAULT_EPS
    phi: Callable | None = None
    general_F: Callable | None = None
    windowed: bool = True
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown variation kind {self.kind!r}")
        object.__setattr__(self, "box", as_box(self.box))
        if self.eps <= 0:
            raise ConfigError("variation half-range eps must be positive")

    @property
    def t_step(self) -> float:
        return T_STEP_FRACTION * self.eps

    @property
    def x_step(self) -> float:
        """FD step in x, scaled to the variation box (the window lives there)."""
        return X_STEP_FRACTION * float(np.min(self.box[:, 1] - self.box[:, 0]))

    def window(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.windowed:
            return np.ones(x.shape[:-1])
        return bump(self.box, x)

    def base(self, x) -> tuple[np.ndarray, np.ndarray]:
        """``(p(x), q(x))`` of the underlying chart."""
        jet = eval_jet2(self.chart, x, second=False)
        return jet.value, dual_map(jet)

    def F(self, t: float, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "general":
            return np.asarray(self.general_F(t, x), dtype=float)
        p, q = self.base(x)
        coef = np.asarray(self.phi(t, x), dtype=float) * self.window(x)
        return p + coef[..., None] * q

    def fields(self, x) -> tuple[np.ndarray, np.ndarray]:
        """``(X, Xbar_dot)``: first and second t-derivatives of F at t = 0."""
        x = np.asarray(x, dtype=float)
        h = self.t_step
        if self.kind == "general":
            stack = lambda ts: np.stack([self.F(t, x) for t in ts])
            X, _ = _richardson(stack, 1, h)
            Xdd, _ = _richardson(stack, 2, h)
            return X, Xdd
        _, q = self.base(x)
        stack = lambda ts: np.stack([np.asarray(self.phi(t, x), dtype=float) for t in ts])
        b = self.window(x)
        d1, _ = _richardson(stack, 1, h)
        d2, _ = _richardson(stack, 2, h)
        return (d1 * b)[..., None] * q, (d2 * b)[..., None] * q


def _sample_points(box: np.ndarray, per_axis: int = 4) -> np.ndarray:
    axes = [np.linspace(a, b, per_axis + 2)[1:-1] for a, b in box]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.shape[0])


def make_characteristic_variation(chart: ImmersionChart, phi: Callable, box, eps: float = DEFAULT_EPS,
                                  windowed: bool = True, kind: str = "characteristic",
                                  label: str = "") -> VariationSpec:
    """``F(t, x) = p(x) + phi(t, x) b(x) q(x)``; requires ``phi(0, .) = 0``.

    Both variational fields are multiples of ``q``, so the family is
    characteristic.
    """
    box = as_box(box)
    pts = _sample_points(box)
    at0 = np.asarray(phi(0.0, pts), dtype=float)
    if np.any(np.abs(at0) > 1e-14):
        k = int(np.argmax(np.abs(at0)))
        raise SpecError(f"phi(0, x) must vanish; phi(0, {pts[k].tolist()}) = {at0[k]:.3e}")
    return VariationSpec(kind=kind, chart=chart, box=box, eps=eps, phi=phi, windowed=windowed,
                         label=label)


def admissible_lift(chart: ImmersionChart, phi0: Callable, box, eps: float = DEFAULT_EPS,
                    label: str = "") -> VariationSpec:
    """The characteristic family ``phi(t, x) = t phi0(x)``."""
    return make_characteristic_variation(
        chart, lambda t, x: t * np.asarray(phi0(x), dtype=float), box, eps,
        kind="admissible_lift", label=label,
    )


def general_variation(chart: ImmersionChart, F: Callable, box, eps: float = DEFAULT_EPS,
                      label: str = "") -> VariationSpec:
    box = as_box(box)
    pts = _sample_points(box)
    gap = np.max(np.abs(np.asarray(F(0.0, pts)) - chart(pts)))
    if gap > 1e-12:
        raise SpecError(f"F(0, .) must equal p; max deviation {gap:.3e}")
    return VariationSpec(kind="general", chart=chart, box=box, eps=eps, general_F=F, label=label)


def _frames(chart: ImmersionChart, grid: QuadratureGrid, tol=DEFAULT_TOLERANCES) -> PointFrame:
    return build_frame(chart, grid.nodes, tol)


def _volume_density(d1: np.ndarray, nodes, pd_tol: float) -> np.ndarray:
    g = induced_metric(d1)
    _require_positive(g, pd_tol, nodes)
    return np.sqrt(np.linalg.det(g))


def volume(chart: ImmersionChart, grid: QuadratureGrid, variation: VariationSpec | None = None,
           t: float = 0.0, tol=DEFAULT_TOLERANCES) -> float:
    """``Vol(t) = sum_k w_k sqrt(det g_t(x_k))``.

    Without a variation the chart's own jets are used; with one, ``g_t`` comes
    from finite-difference jets of ``F(t, .)``.
    """
    if variation is None:
        def density(nodes):
            jet = eval_jet2(chart, nodes, second=False)
            return _volume_density(jet.d1, nodes, tol.pd_tol)
    else:
        def density(nodes):
            _, d1, _ = stencil.derivatives(lambda x: variation.F(t, x), nodes, variation.x_step,
                                           second=False, domain=chart.domain)
            return _volume_density(d1, nodes, tol.pd_tol)
    return grid.integrate(map_nodes(density, grid.nodes))


def _field_at_nodes(X, nodes) -> np.ndarray:
    return np.asarray(X(nodes) if callable(X) else X, dtype=float)


def first_variation_general(chart: ImmersionChart, grid: QuadratureGrid, X,
                            tol=DEFAULT_TOLERANCES) -> float:
    """``int (-tr(A) <X, p> + n <X, q>) dV`` for an ambient field X at the nodes."""
    fr = _frames(chart, grid, tol)
    Xn = _field_at_nodes(X, grid.nodes)
    dV = np.sqrt(np.linalg.det(fr.g))
    integrand = -fr.trA * inner(Xn, fr.p) + fr.n * inner(Xn, fr.q)
    return grid.integrate(integrand * dV)


def first_variation_admissible(chart: ImmersionChart, grid: QuadratureGrid, phi0: Callable,
                               tol=DEFAULT_TOLERANCES) -> float:
    """``-int tr(A) phi0 b dV``: the admissible case, using ``<q, p> = 1``."""
    fr = _frames(chart, grid, tol)
    psi = np.asarray(phi0(grid.nodes), dtype=float) * bump(grid.box, grid.nodes)
    dV = np.sqrt(np.linalg.det(fr.g))
    return grid.integrate(-fr.trA * psi * dV)


def _require_scalar_flat(fr: PointFrame, tol) -> None:
    smax = float(np.max(np.abs(fr.S)))
    if smax >= tol.s_flat_tol:
        raise SPrecondError(
            f"scalar curvature is not identically zero on the grid (max |S| = {smax:.3e}); "
            "the characteristic second-variation formula needs S = 0"
        )


def second_variation_characteristic(chart: ImmersionChart, grid: QuadratureGrid, phi0: Callable,
                                    tol=DEFAULT_TOLERANCES) -> float:
    """``-int (phi0 b)^2 tr(A^2) dV``; only defined for scalar-flat charts."""
    fr = _frames(chart, grid, tol)
    _require_scalar_flat(fr, tol)
    psi = np.asarray(phi0(grid.nodes), dtype=float) * bump(grid.box, grid.nodes)
    dV = np.sqrt(np.linalg.det(fr.g))
    return grid.integrate(-(psi**2) * fr.trA2 * dV)


def second_variation_terms(chart: ImmersionChart, grid: QuadratureGrid, spec: VariationSpec,
                           tol=DEFAULT_TOLERANCES) -> dict:
    """Per-node terms of the general second-variation integrand.

    ``normal``: sum_i |(D_i X)^perp|^2, ``cross``: sum_ij <D_i X, e_j><D_j X, e_i>,
    ``trace_sq``: (sum_i <D_i X, e_i>)^2, ``accel``: <Xbar_dot, H>, where
    ``D_i X`` is the ambient derivative of X along the orthonormal vector e_i.
    The ambient curvature term is absent (Minkowski space is flat).
    """
    fr = _frames(chart, grid, tol)
    nodes = grid.nodes

    def x_field(pts):
        return spec.fields(pts)[0]

    X, dX, _ = stencil.derivatives(x_field, nodes, spec.x_step, second=False, domain=chart.domain)
    _, Xdd = spec.fields(nodes)
    D = np.einsum("...ai,...am->...im", fr.onb, dX)
    E = fr.orthonormal_vectors()
    M = inner(D[..., :, None, :], E[..., None, :, :])  # M[i, j] = <D_i X, e_j>
    normal = np.sum(inner(D, D), axis=-1) - np.sum(M**2, axis=(-2, -1))
    cross = np.einsum("...ij,...ji->...", M, M)
    trace_sq = np.trace(M, axis1=-2, axis2=-1) ** 2
    accel = inner(Xdd, fr.H)
    return {
        "X": X, "Xbar_dot": Xdd, "frame": fr,
        "normal": normal, "cross": cross, "trace_sq": trace_sq, "accel": accel,
        "integrand": normal - cross + trace_sq - accel,
        "dV": np.sqrt(np.linalg.det(fr.g)),
    }


def second_variation_general(chart: ImmersionChart, grid: QuadratureGrid, spec: VariationSpec,
                             tol=DEFAULT_TOLERANCES) -> float:
    terms = second_variation_terms(chart, grid, spec, tol)
    return grid.integrate(terms["integrand"] * terms["dV"])


def reduced_admissible_integrand(fr: PointFrame, X, Xbar_dot) -> np.ndarray:
    """The general integrand evaluated for ``X = phi q`` term by term.

    ``-phi^2 tr(A^2) + phi^2 tr(A)^2 - tr(A) <Xbar_dot, p> + n <Xbar_dot, q>``
    with ``phi = <X, p>``; on scalar-flat charts only the first and last
    terms survive.
    """
    phi = inner(X, fr.p)
    return (-(phi**2) * fr.trA2 + phi**2 * fr.trA**2
            - fr.trA * inner(Xbar_dot, fr.p) + fr.n * inner(Xbar_dot, fr.q))


@dataclass
class VariationReport:
    closed_form_d1: float
    fd_d1: float
    closed_form_d2: float | None
    fd_d2: float
    rel_err_d1: float
    rel_err_d2: float | None
    sign_check_d2: bool | None
    general_d2: float
    rel_err_general_d2: float
    fd_err_d1: float
    fd_err_d2: float
    notes: list = field(default_factory=list)
    per_node: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


def variation_report(chart: ImmersionChart, grid: QuadratureGrid, spec: VariationSpec,
                     h: float | None = None, tol=DEFAULT_TOLERANCES, verbose: bool = False) -> VariationReport:
    """Closed forms next to Richardson finite differences of ``Vol(t)``."""
    h = spec.t_step if h is None else h
    vol = lambda t: volume(chart, grid, spec, t, tol)
    fd1, fd2 = fd_derivatives(vol, h)
    terms = second_variation_terms(chart, grid, spec, tol)
    fr, X, dV = terms["frame"], terms["X"], terms["dV"]
    cf1 = grid.integrate((-fr.trA * inner(X, fr.p) + fr.n * inner(X, fr.q)) * dV)
    gen2 = grid.integrate(terms["integrand"] * dV)
    notes = []
    cf2 = rel2 = sign = None
    if spec.kind == "general":
        notes.append("general family: characteristic second-variation formula not applicable")
    else:
        try:
            _require_scalar_flat(fr, tol)
            cf2 = grid.integrate(-(inner(X, fr.p) ** 2) * fr.trA2 * dV)
            rel2 = _rel(cf2, fd2.value)
            sign = bool(cf2 <= 1e-12)
        except SPrecondError as exc:
            notes.append(f"SPrecondError: {exc}")
    per_node = None
    if verbose:
        per_node = {
            "nodes": grid.nodes.tolist(),
            "S": np.asarray(fr.S).tolist(),
            "trA2": np.asarray(fr.trA2).tolist(),
            "second_variation_integrand": terms["integrand"].tolist(),
        }
    return VariationReport(
        closed_form_d1=cf1, fd_d1=fd1.value, closed_form_d2=cf2, fd_d2=fd2.value,
        rel_err_d1=_rel(cf1, fd1.value), rel_err_d2=rel2, sign_check_d2=sign,
        general_d2=gen2, rel_err_general_d2=_rel(gen2, fd2.value),
        fd_err_d1=fd1.error, fd_err_d2=fd2.error, notes=notes, per_node=per_node,
    )
