"""``lightcone`` command line: frame, volume, vary, nullspace and verify.

Every subcommand writes a JSON report (or CSV for ``volume --sweep``) to
``--report`` or stdout. Exit status is 0 on success, 2 when a check fails
and 1 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .chart import chart_from_config
from .config import DEFAULT_EPS, DEFAULT_ORDER, RunConfig, Tolerances, thread_count
from .errors import ConfigError, LightconeError, TubularRangeWarning
from .frame import build_frame
from .functional import (
    admissible_lift,
    general_variation,
    variation_report,
    volume,
)
from .lorentz_core import inner
from .nullspace import (
    convert_null_variation,
    null_metric,
    phi_value,
    volume_equality_check,
)
from .quadrature import as_box, build_grid, bump
from .verify import acceptance_suite, all_passed, chart_suite, random_null_variation, random_points

SUBCOMMANDS = ("frame", "volume", "vary", "nullspace", "verify")
NULL_CHECKS = ("slices", "kernel", "theorem")

# thresholds a `vary` report must meet to exit 0
VARY_D1_TOL = 1e-5
VARY_D2_TOL = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- argument parsing ---------------------------------------------------------


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{what} must be comma-separated numbers, got {text!r}") from exc


def parse_box(text: str) -> list[list[float]]:
    """``"a:b,c:d"`` -> ``[[a, b], [c, d]]``."""
    out = []
    for part in text.split(","):
        try:
            a, b = part.split(":")
            out.append([float(a), float(b)])
        except ValueError as exc:
            raise ConfigError(f"box entries must look like a:b, got {part!r}") from exc
    as_box(out)
    return out


def parse_sweep(text: str) -> np.ndarray:
    """``"t0:t1:steps"`` -> evenly spaced t values (``steps`` points)."""
    try:
        t0, t1, steps = text.split(":")
        t0, t1, steps = float(t0), float(t1), int(steps)
    except ValueError as exc:
        raise ConfigError(f"--sweep must look like t0:t1:steps, got {text!r}") from exc
    if steps < 1:
        raise ConfigError("--sweep needs at least one step")
    return np.linspace(t0, t1, steps)


def parse_phi(text: str, box: np.ndarray):
    """Build ``phi0(x)`` from a CLI name.

    ``const`` is the constant 1. ``x<k>`` is the k-th coordinate (1-based)
    rescaled to [-1, 1] over the box. ``poly:c:e1,e2;c:e1,e2`` is a sum of
    monomials ``c * prod x_i^e_i`` in the same rescaled coordinates.
    """
    mid = box.mean(axis=1)
    half = 0.5 * (box[:, 1] - box[:, 0])
    n = box.shape[0]

    def scaled(x):
        return (np.asarray(x, dtype=float) - mid) / half

    if text == "const":
        return lambda x: np.ones(np.shape(x)[:-1])
    if text.startswith("x") and text[1:].isdigit():
        k = int(text[1:])
        if not 1 <= k <= n:
            raise ConfigError(f"--phi {text}: coordinate index must be in 1..{n}")
        return lambda x: scaled(x)[..., k - 1]
    if text.startswith("poly:"):
        terms = []
        for chunk in text[5:].split(";"):
            try:
                coef, exps = chunk.split(":")
                exps = [int(e) for e in exps.split(",")]
                terms.append((float(coef), exps))
            except ValueError as exc:
                raise ConfigError(f"bad monomial {chunk!r} in --phi (expected coef:e1,...,en)") from exc
            if len(exps) != n or min(exps) < 0:
                raise ConfigError(f"monomial {chunk!r} needs {n} non-negative exponents")

        def poly(x):
            u = scaled(x)
            return sum(c * np.prod(u ** np.array(e), axis=-1) for c, e in terms)

        return poly
    raise ConfigError(f"unknown --phi {text!r}; use const, x<k> or poly:...")


def _chart_config(spec: str, n: int | None) -> dict:
    """``builtin:<name>`` or a path to a JSON file with a run config."""
    if spec.startswith("builtin:"):
        return {"chart": {"name": spec[len("builtin:"):], "n": 2 if n is None else n}}
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"--chart must be builtin:<name> or a JSON file, got {spec!r}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{spec}: invalid JSON ({exc})") from exc
    if "chart" not in cfg:
        cfg = {"chart": cfg}
    if n is not None:
        cfg["chart"] = {**cfg["chart"], "n": n}
    return cfg


def build_run_config(args) -> RunConfig:
    cfg = _chart_config(args.chart, args.n)
    tol = Tolerances(**cfg.get("tolerances", {}))
    box = parse_box(args.box) if args.box else cfg.get("box")
    order = args.order if args.order is not None else cfg.get("order", DEFAULT_ORDER)
    eps = args.eps if args.eps is not None else cfg.get("eps", DEFAULT_EPS)
    return RunConfig(chart=dict(cfg["chart"]), box=box, order=int(order), eps=float(eps),
                     tolerances=tol, threads=thread_count(), verbose=bool(args.verbose))


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lightcone", description="Hypersurfaces in the light-cone: numerical checks.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--chart", default="builtin:euclidean",
                       help="builtin:<name> or path to a JSON run config")
        p.add_argument("--n", type=int, default=None, help="chart dimension parameter")
        p.add_argument("--box", default=None, help="integration box as a:b,c:d (default [0,1]^n)")
        p.add_argument("--order", type=int, default=None, help="Gauss-Legendre order per axis")
        p.add_argument("--eps", type=float, default=None, help="variation half-range")
        p.add_argument("--report", default=None, help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=20240601)
        p.add_argument("--verbose", action="store_true")
        return p

    p = common(sub.add_parser("frame", help="frame quantities at one point"))
    p.add_argument("--at", default=None, help="parameter point, comma separated (default: domain center)")
    p = common(sub.add_parser("volume", help="volume of the box, or a Vol(t) sweep as CSV"))
    p.add_argument("--phi", default="const")
    p.add_argument("--kind", choices=("characteristic", "general"), default="characteristic")
    p.add_argument("--sweep", default=None, help="t0:t1:steps")
    p = common(sub.add_parser("vary", help="variation report: closed forms vs finite differences"))
    p.add_argument("--phi", default="const")
    p.add_argument("--kind", choices=("characteristic", "general"), default="characteristic")
    p = common(sub.add_parser("nullspace", help="checks on the extended ruled map"))
    p.add_argument("--t-samples", type=int, default=5)
    p.add_argument("--check", choices=NULL_CHECKS, action="append", default=None)
    p = common(sub.add_parser("verify", help="invariant suites for the chart"))
    p.add_argument("--acceptance", action="store_true", help="run every acceptance criterion instead")
    p.add_argument("--trials", type=int, default=5)
    return parser


# --- subcommands ----------------------------------------------------------------


def _setup(rc: RunConfig):
    chart = chart_from_config(rc.chart)
    box = as_box(rc.box if rc.box is not None else [[0.0, 1.0]] * chart.n)
    return chart, box


def _family(chart, box, rc: RunConfig, phi_name: str, kind: str):
    phi0 = parse_phi(phi_name, box)
    if kind == "characteristic":
        return admissible_lift(chart, phi0, box, rc.eps, label=f"phi0={phi_name}")

    # leaves the cone along p + q, so it is neither admissible nor characteristic
    def F(t, x):
        fr = build_frame(chart, x, rc.tolerances)
        coef = t * np.asarray(phi0(x), dtype=float) * bump(box, x)
        return fr.p + coef[..., None] * (fr.p + fr.q)

    return general_variation(chart, F, box, rc.eps, label=f"general phi0={phi_name}")


def cmd_frame(args, rc: RunConfig):
    chart, _ = _setup(rc)
    x = chart.center if args.at is None else np.array(_parse_floats(args.at, "--at"))
    if x.shape != (chart.n,):
        raise ConfigError(f"--at needs {chart.n} coordinates")
    fr = build_frame(chart, x, rc.tolerances)
    return {"frame": fr.to_dict()}, True


def cmd_volume(args, rc: RunConfig):
    chart, box = _setup(rc)
    grid = build_grid(box, rc.order, chart)
    if args.sweep is None:
        return {"volume": volume(chart, grid, tol=rc.tolerances)}, True
    spec = _family(chart, box, rc, args.phi, args.kind)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "volume"])
    for t in parse_sweep(args.sweep):
        writer.writerow([repr(float(t)), repr(volume(chart, grid, spec, float(t), rc.tolerances))])
    return buf.getvalue(), True


def cmd_vary(args, rc: RunConfig):
    chart, box = _setup(rc)
    grid = build_grid(box, rc.order, chart)
    spec = _family(chart, box, rc, args.phi, args.kind)
    rep = variation_report(chart, grid, spec, tol=rc.tolerances, verbose=rc.verbose)
    ok = rep.rel_err_d1 < VARY_D1_TOL and rep.rel_err_general_d2 < VARY_D2_TOL
    if rep.rel_err_d2 is not None:
        ok = ok and rep.rel_err_d2 < VARY_D2_TOL and bool(rep.sign_check_d2)
    return {"variation": rep.to_dict(), "kind": args.kind, "phi": args.phi}, ok


def cmd_nullspace(args, rc: RunConfig):
    chart, box = _setup(rc)
    checks = args.check or list(NULL_CHECKS)
    rng = np.random.default_rng(args.seed)
    if args.t_samples < 1:
        raise ConfigError("--t-samples must be >= 1")
    ts = np.linspace(-0.5, 0.5, args.t_samples)
    x = random_points(chart, args.t_samples, rng)
    out, ok = {}, True
    if "slices" in checks:
        resid = [abs(float(inner(phi_value(chart, t, xi), phi_value(chart, t, xi))) - 2 * t)
                 for t, xi in zip(ts, x)]
        out["slices"] = {"t": ts.tolist(), "max_abs_residual": max(resid), "tol": 1e-9}
        ok &= max(resid) < 1e-9
    if "kernel" in checks:
        rows = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TubularRangeWarning)
            for t, xi in zip(ts, x):
                g = null_metric(chart, float(t), xi)
                rows.append({"t": float(t), "kernel_residual": float(np.linalg.norm(g[:, 0])),
                             "x_block_min_eig": float(np.linalg.eigvalsh(g[1:, 1:])[0])})
        out["kernel"] = {"samples": rows, "tol": 1e-8}
        ok &= all(r["kernel_residual"] < 1e-8 and r["x_block_min_eig"] > 0 for r in rows)
    if "theorem" in checks:
        grid = build_grid(box, rc.order, chart)
        nv = random_null_variation(box, rng)
        spec = convert_null_variation(chart, nv, box)
        sample_t = np.linspace(-spec.eps, spec.eps, 5) * 0.9
        res = volume_equality_check(chart, nv, spec, grid, sample_t, rc.tolerances)
        res["tol"] = 1e-6
        out["theorem"] = res
        ok &= res["max_abs_diff"] < 1e-6
    return out, bool(ok)


def cmd_verify(args, rc: RunConfig):
    if args.acceptance:
        suites = acceptance_suite(args.seed)
    else:
        chart, _ = _setup(rc)
        order = rc.order if args.order is not None else None
        suites = chart_suite(chart, seed=args.seed, order=order, trials=args.trials)
    summary = {k: all(c.passed for c in v) for k, v in suites.items()}
    body = {"suites": {k: [c.to_dict() for c in v] for k, v in suites.items()}, "summary": summary}
    if rc.verbose:
        for checks in suites.values():
            for c in checks:
                print(c.line(), file=sys.stderr)
    return body, all_passed(suites)


HANDLERS = {"frame": cmd_frame, "volume": cmd_volume, "vary": cmd_vary,
            "nullspace": cmd_nullspace, "verify": cmd_verify}


# --- output -----------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def render(body: dict, rc: RunConfig, command: str, ok: bool) -> str:
    doc = {"command": command, "config": rc.to_dict(), "ok": ok, **body}
    return json.dumps(doc, default=_jsonable, sort_keys=True, indent=2) + "\n"


def run(argv=None) -> int:
    """Entry point returning the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parser().parse_args(argv)
        if args.command is None:
            raise UsageError(f"lightcone: choose a subcommand from {', '.join(SUBCOMMANDS)}")
        rc = build_run_config(args)
        body, ok = HANDLERS[args.command](args, rc)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        _parser().print_usage(sys.stderr)
        return 1
    except (ConfigError, LightconeError) as exc:
        print(f"lightcone: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    text = body if isinstance(body, str) else render(body, rc, args.command, ok)
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
