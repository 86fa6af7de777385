"""Immersion charts p: D -> light-cone with second-order jets.

A chart is a closed parameter box ``D`` together with a vectorized evaluator
``x -> p(x)``. Built-in charts carry exact jets; any other chart falls back
to 4th-order central differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import stencil
from .config import DEFAULT_TOLERANCES, X_STEP_FRACTION
from .errors import ConfigError, DomainError, DualDegenerateError, LightconeError, SpacelikeViolation
from .lorentz_core import metric_signs

__all__ = [
    "BUILTIN_NAMES",
    "ImmersionChart",
    "Jet2",
    "builtin",
    "chart_from_config",
    "dual_chart",
    "eval_jet2",
    "induced_metric",
    "validate_spacelike",
]


@dataclass(frozen=True)
class Jet2:
    """Value and parameter derivatives of a chart, batched over leading axes.

    ``d1[..., i, :]`` is the i-th partial, ``d2[..., i, j, :]`` the mixed
    second partial; ``d2`` is exactly symmetric in ``(i, j)``.
    """

    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.d1.shape[-2]


@dataclass(frozen=True)
class ImmersionChart:
    name: str
    n: int
    domain: np.ndarray
    evaluator: Callable[[np.ndarray], np.ndarray]
    analytic_jet: Callable[[np.ndarray], tuple] | None = None
    fd_step: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        dom = np.asarray(self.domain, dtype=float)
        if dom.shape != (self.n, 2) or np.any(dom[:, 1] <= dom[:, 0]):
            raise ConfigError(f"domain must be an ({self.n}, 2) box with a < b")
        object.__setattr__(self, "domain", dom)
        if self.fd_step is None:
            step = X_STEP_FRACTION * float(np.min(dom[:, 1] - dom[:, 0]))
            object.__setattr__(self, "fd_step", step)

    @property
    def ambient_dim(self) -> int:
        return int(np.asarray(self.evaluator(self.center)).shape[-1])

    @property
    def center(self) -> np.ndarray:
        return self.domain.mean(axis=1)

    @property
    def jet_backend(self) -> str:
        return "analytic" if self.analytic_jet is not None else f"finite_difference(h={self.fd_step:g})"

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    def contains(self, x, margin: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo = self.domain[:, 0] + margin
        hi = self.domain[:, 1] - margin
        return np.all((x >= lo - 1e-15) & (x <= hi + 1e-15), axis=-1)


def _check_inside(chart: ImmersionChart, x: np.ndarray) -> None:
    if x.shape[-1] != chart.n:
        raise DomainError(f"chart {chart.name} takes {chart.n} parameters, got {x.shape[-1]}")
    if not np.all(chart.contains(x)):
        raise DomainError(f"point outside the domain of chart {chart.name}")


def eval_jet2(chart: ImmersionChart, x, backend: str | None = None, second: bool = True) -> Jet2:
    """Jets of ``chart`` at ``x`` (shape ``(n,)`` or ``(..., n)``).

    ``backend`` forces ``"analytic"`` or ``"fd"``; by default analytic jets
    are used whenever the chart provides them.
    """
    x = np.asarray(x, dtype=float)
    _check_inside(chart, x)
    use_fd = backend == "fd" or (backend is None and chart.analytic_jet is None)
    if backend == "analytic" and chart.analytic_jet is None:
        raise ConfigError(f"chart {chart.name} has no analytic jets")
    if use_fd:
        value, d1, d2 = stencil.derivatives(
            chart.evaluator, x, chart.fd_step, second=second, domain=chart.domain
        )
    else:
        value, d1, d2 = chart.analytic_jet(x)
        if not second:
            d2 = None
    return Jet2(value=value, d1=d1, d2=d2)


def induced_metric(d1: np.ndarray) -> np.ndarray:
    """``g_ij = <d_i p, d_j p>`` from tangent vectors ``(..., n, m)``."""
    eta = metric_signs(d1.shape[-1])
    g = np.einsum("...ik,k,...jk->...ij", d1, eta, d1)
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def validate_spacelike(chart: ImmersionChart, x, pd_tol: float = DEFAULT_TOLERANCES.pd_tol,
                       jet: Jet2 | None = None) -> np.ndarray:
    """Induced metric at ``x``; raises SpacelikeViolation unless positive definite."""
    if jet is None:
        jet = eval_jet2(chart, x, second=False)
    g = induced_metric(jet.d1)
    _require_positive(g, pd_tol, x)
    return g


def _require_positive(g: np.ndarray, pd_tol: float, x) -> None:
    eig = np.linalg.eigvalsh(g)[..., 0]
    if np.any(~np.isfinite(eig)) or np.any(eig <= pd_tol):
        flat = np.atleast_1d(eig)
        k = int(np.nanargmin(np.where(np.isfinite(flat), flat, -np.inf)))
        pts = np.asarray(x, dtype=float).reshape(-1, np.shape(g)[-1]) if x is not None else None
        point = pts[k].tolist() if pts is not None and k < len(pts) else None
        raise SpacelikeViolation(
            f"induced metric not positive definite (min eigenvalue {flat[k]:.3e}) at {point}",
            eigenvalue=float(flat[k]),
            point=point,
        )


# --- built-in catalog ------------------------------------------------------

_F0 = {
    "one": lambda s: np.ones_like(s),
    "cos": np.cos, "sin": np.sin, "cosh": np.cosh, "sinh": np.sinh,
}
_F1 = {
    "one": lambda s: np.zeros_like(s),
    "cos": lambda s: -np.sin(s), "sin": np.cos, "cosh": np.sinh, "sinh": np.cosh,
}
_F2 = {
    "one": lambda s: np.zeros_like(s),
    "cos": lambda s: -np.cos(s), "sin": lambda s: -np.sin(s), "cosh": np.cosh, "sinh": np.sinh,
}


def _separable_chart(table: list[dict[int, str]], n: int):
    """Evaluator and exact jets for coordinates of the form prod_k f_k(x_k).

    ``table[c]`` maps a parameter index to the factor kind of coordinate c;
    missing indices contribute the constant factor 1.
    """
    kinds = [[row.get(k, "one") for k in range(n)] for row in table]

    def factors(x, tab):
        # (..., m, n): factor of coordinate c in variable k
        return np.stack(
            [np.stack([tab[kinds[c][k]](x[..., k]) for k in range(n)], axis=-1)
             for c in range(len(kinds))],
            axis=-2,
        )

    def evaluator(x):
        x = np.asarray(x, dtype=float)
        return np.prod(factors(x, _F0), axis=-1)

    def jet(x):
        x = np.asarray(x, dtype=float)
        f0, f1, f2 = factors(x, _F0), factors(x, _F1), factors(x, _F2)
        value = np.prod(f0, axis=-1)
        d1 = np.empty(x.shape[:-1] + (n, len(kinds)))
        d2 = np.empty(x.shape[:-1] + (n, n, len(kinds)))
        for i in range(n):
            fi = f0.copy()
            fi[..., i] = f1[..., i]
            d1[..., i, :] = np.prod(fi, axis=-1)
            fii = f0.copy()
            fii[..., i] = f2[..., i]
            d2[..., i, i, :] = np.prod(fii, axis=-1)
            for j in range(i + 1, n):
                fij = fi.copy()
                fij[..., j] = f1[..., j]
                d2[..., i, j, :] = d2[..., j, i, :] = np.prod(fij, axis=-1)
        return value, d1, d2

    return evaluator, jet


def _hyperboloid_table(n: int, offset: int = 0) -> list[dict[int, str]]:
    # x_1 = (cosh s1, sinh s1); x_k = (cosh s_k x_{k-1}, sinh s_k)
    rows = [{offset: "cosh"}, {offset: "sinh"}]
    for k in range(1, n):
        rows = [{**r, offset + k: "cosh"} for r in rows] + [{offset + k: "sinh"}]
    return rows


def _sphere_table(n: int, offset: int = 0) -> list[dict[int, str]]:
    # u_1 = (sin t1, cos t1); the last coordinate is prod cos t_k, so the
    # parameter origin maps to the pole (0, ..., 0, 1)
    rows = [{offset: "sin"}, {offset: "cos"}]
    for k in range(1, n):
        rows = ([{**r, offset + k: "cos"} for r in rows[:-1]]
                + [{offset + k: "sin"}]
                + [{**rows[-1], offset + k: "cos"}])
    return rows


def _angle_box(n: int) -> list[list[float]]:
    return [[-3.0, 3.0]] + [[-1.4, 1.4]] * (n - 1)


def _euclidean_jet(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    value = np.concatenate([((1 + r2) / 2)[..., None], ((-1 + r2) / 2)[..., None], x], axis=-1)
    d1 = np.zeros(x.shape[:-1] + (n, n + 2))
    d1[..., 0] = x
    d1[..., 1] = x
    d1[..., 2:] = np.eye(n)
    d2 = np.zeros(x.shape[:-1] + (n, n, n + 2))
    d2[..., 0] = np.eye(n)
    d2[..., 1] = np.eye(n)
    return value, d1, d2


def _euclidean_value(x):
    return _euclidean_jet(x)[0]


BUILTIN_NAMES = ("euclidean", "hyperbolic_sphere_product", "round_sphere")
_ALIASES = {"hs_product": "hyperbolic_sphere_product", "hs": "hyperbolic_sphere_product",
            "sphere": "round_sphere"}


def builtin(name: str, n: int, box=None) -> ImmersionChart:
    """Catalog chart by name.

    ``euclidean(n)``: the isometric immersion of R^n,
    ``p(x) = ((1+|x|^2)/2, (-1+|x|^2)/2, x)``.

    ``hyperbolic_sphere_product(n)``: the inclusion of H^n x S^n into
    R^{2n+2}_1 (intrinsic dimension 2n), parameters ``(s_1..s_n, t_1..t_n)``.

    ``round_sphere(n)``: ``p(u) = (1, u)`` for the unit sphere S^n; positive
    scalar curvature control case.
    """
    key = _ALIASES.get(name, name)
    if key not in BUILTIN_NAMES:
        raise ConfigError(f"unknown built-in chart {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    n = int(n)
    if n < 1:
        raise ConfigError("chart dimension must be >= 1")
    params = {"n": n}
    if key == "euclidean":
        dim = n
        evaluator, jet = _euclidean_value, _euclidean_jet
        default_box = [[-2.0, 2.0]] * n
    elif key == "hyperbolic_sphere_product":
        dim = 2 * n
        table = _hyperboloid_table(n) + list(reversed(_sphere_table(n, offset=n)))
        evaluator, jet = _separable_chart(table, dim)
        default_box = [[-2.0, 2.0]] * n + _angle_box(n)
    else:
        dim = n
        table = [{}] + _sphere_table(n)
        evaluator, jet = _separable_chart(table, dim)
        default_box = _angle_box(n)
    domain = np.asarray(default_box if box is None else box, dtype=float)
    return ImmersionChart(name=key, n=dim, domain=domain, evaluator=evaluator,
                          analytic_jet=jet, params=params)


def chart_from_config(cfg: dict) -> ImmersionChart:
    """Build a chart from ``{"name": ..., "n": ..., "box": ..., "params": {...}}``."""
    if "name" not in cfg or "n" not in cfg:
        raise ConfigError("chart config needs 'name' and 'n'")
    name = str(cfg["name"])
    dual = name.startswith("dual:")
    chart = builtin(name.removeprefix("dual:"), cfg["n"], cfg.get("box"))
    return dual_chart(chart) if dual else chart


def dual_chart(chart: ImmersionChart, samples_per_axis: int = 3,
               pd_tol: float = DEFAULT_TOLERANCES.pd_tol) -> ImmersionChart:
    """Chart of the dual map ``x -> q(x)``, differentiated by finite differences.

    The immersion test runs on a small lattice of interior points; failure
    anywhere raises DualDegenerateError.
    """
    from .frame import dual_map

    def evaluator(x):
        return dual_map(eval_jet2(chart, x, second=False))

    dual = ImmersionChart(
        name=f"dual:{chart.name}", n=chart.n, domain=chart.domain, evaluator=evaluator,
        analytic_jet=None, fd_step=chart.fd_step, params=dict(chart.params),
    )
    margin = 4.0 * chart.fd_step
    axes = [np.linspace(a + margin, b - margin, samples_per_axis) for a, b in chart.domain]
    lattice = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart.n)
    try:
        jet = eval_jet2(dual, lattice, second=False)
        _require_positive(induced_metric(jet.d1), pd_tol, lattice)
    except SpacelikeViolation as exc:
        raise DualDegenerateError(
            f"dual map of {chart.name} is not a spacelike immersion: {exc}"
        ) from exc
    except LightconeError as exc:
        if isinstance(exc, DualDegenerateError):
            raise
        raise DualDegenerateError(f"dual map of {chart.name} is undefined: {exc}") from exc
    return dual
