"""Command-line front end: ``dixon solve | compare | coeffs | validate``.

Exit codes: 0 success, 2 inadmissible parameters, 3 a method did not
converge (or, for ``compare`` and ``validate``, a check failed), 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .core import METHODS, AdmissibilityError, DixonError, MethodResult, ProblemSpec, require_admissible, residual_supnorm
from .fredholm_oracle import nystrom_eval, nystrom_solve, picard_solve
from .mellin_quadrature import (
    ContourSettings,
    closures,
    default_exterior_contour,
    f_exterior_mb,
    f_interior_mb,
)
from .residue_series import (
    DEFAULT_M_CAP,
    SeriesDivergenceError,
    SeriesTruncation,
    auto_truncation,
    exterior_constant_sum,
    exterior_truncation,
    f_exterior_series,
    f_interior_series,
)
from .specfun import digamma, laurent_coeffs

EXIT_OK, EXIT_ADMISSIBILITY, EXIT_NONCONVERGENCE, EXIT_IO = 0, 2, 3, 4
JUNCTION = (0.95, 1.05)


@dataclass
class RunConfig:
    a: float
    A: float
    lambda_re: float
    lambda_im: float = 0.0
    methods: tuple = METHODS
    grid: tuple | None = (21, 0.0, 1.0)
    points: tuple | None = None
    tol: float = 1e-8
    sigma_interior: float = 0.5
    sigma_exterior: float | None = None
    n_max: int | None = None
    m_max: int | None = None
    nystrom_n: int = 512
    output: str = "csv"
    out_path: str | None = None
    time_budget: float | None = 300.0
    residual_nodes: int = 256

    def spec(self) -> ProblemSpec:
        return ProblemSpec(self.a, self.A, complex(self.lambda_re, self.lambda_im))

    def xs(self) -> np.ndarray:
        if self.points is not None:
            xs = np.array(sorted(set(float(p) for p in self.points)))
        else:
            count, lo, hi = self.grid
            xs = np.linspace(lo, hi, int(count))
        if np.any(xs < 0):
            raise ValueError("grid points must be nonnegative")
        return xs


# ---------------------------------------------------------------------------
# running the methods
# ---------------------------------------------------------------------------

@dataclass
class Run:
    spec: ProblemSpec
    xs: np.ndarray
    results: dict
    meta: dict = field(default_factory=dict)
    evaluator: list = field(default_factory=list)


def _nan_result(xs, method):
    return np.full(len(xs), np.nan + 0j), np.full(len(xs), np.nan)


def _contours(cfg: RunConfig, spec: ProblemSpec):
    interior = ContourSettings(cfg.sigma_interior)
    exterior = ContourSettings(cfg.sigma_exterior) if cfg.sigma_exterior is not None else default_exterior_contour(spec)
    return interior, exterior


def _gate(cfg: RunConfig, spec: ProblemSpec):
    """Admissibility at 1/2 (the Neumann ratio) and at every abscissa the methods use."""
    sigmas = [0.5]
    if {"mellin", "series"} & set(cfg.methods):
        sigmas.append(cfg.sigma_interior)
        if cfg.sigma_exterior is not None:
            sigmas.append(cfg.sigma_exterior)
    for sg in sigmas:
        require_admissible(spec, sg)


def _series_truncation(cfg: RunConfig, spec: ProblemSpec, x_worst: float, *, exterior: bool = False) -> SeriesTruncation:
    trunc = exterior_truncation(spec, cfg.tol, x_worst) if exterior else auto_truncation(spec, cfg.tol, x_worst)
    if cfg.n_max is None and cfg.m_max is None:
        return trunc
    return SeriesTruncation(
        n_max=cfg.n_max or trunc.n_max,
        m_max=cfg.m_max or trunc.m_max,
        tol=trunc.tol,
        rho=trunc.rho,
        dps=trunc.dps,
    )


def run_methods(cfg: RunConfig) -> Run:
    spec = cfg.spec()
    _gate(cfg, spec)
    xs = cfg.xs()
    A = spec.A
    inside = xs <= A
    if np.any(~inside) and not {"mellin", "series"} & set(cfg.methods):
        raise ValueError("points beyond A need the mellin or series method")
    run = Run(spec=spec, xs=xs, results={})
    run.meta["rho"] = spec.rho
    run.meta["admissibility_bound"] = require_admissible(spec, 0.5).bound
    need_contours = {"mellin", "series"} & set(cfg.methods)
    fa = None
    if need_contours:
        c_int, c_ext = _contours(cfg, spec)
        cl = closures(spec, c_ext, c_int)
        fa = cl.exterior
        run.meta.update(sigma_interior=c_int.sigma, sigma_exterior=c_ext.sigma,
                        fA_exterior=[fa.real, fa.imag], fA_interior=[cl.interior.real, cl.interior.imag])

    for method in METHODS:
        if method not in cfg.methods:
            continue
        vals, errs = _nan_result(xs, method)
        if method in ("nystrom", "picard"):
            if method == "nystrom":
                grid = nystrom_solve(spec, cfg.nystrom_n)
            else:
                grid = picard_solve(spec, cfg.nystrom_n)
            run.meta[method] = {k: v for k, v in grid.meta.items()}
            vals[inside] = nystrom_eval(grid, spec, xs[inside])
            errs[inside] = 0.0 if method == "nystrom" else grid.meta["last_change"]
            run.meta[f"{method}_grid"] = grid
        elif method == "mellin":
            if np.any(inside):
                vals[inside], errs[inside] = f_interior_mb(xs[inside], spec, fa, c_int, full_output=True)
            if np.any(~inside):
                vals[~inside], errs[~inside] = f_exterior_mb(xs[~inside], spec, fa, c_ext, full_output=True)
        else:
            vals, errs, evaluator = _series_values(cfg, spec, xs, fa, c_int, c_ext, run.meta)
            run.evaluator = evaluator
        run.results[method] = MethodResult(xs=xs, values=vals, method=method, est_error=errs)
    return run


def _series_values(cfg, spec, xs, fa, c_int, c_ext, meta):
    """Series where it converges geometrically, contour quadrature inside the junction window."""
    q = xs / spec.A
    interior = q <= JUNCTION[0]
    exterior = q >= JUNCTION[1]
    window = ~(interior | exterior)
    vals = np.full(len(xs), np.nan + 0j)
    errs = np.full(len(xs), np.nan)
    evaluator = np.where(window, "mellin", "series").tolist()
    x_worst = float(np.max(xs[interior])) if np.any(interior & (xs > 0)) else 0.5 * spec.A
    trunc = _series_truncation(cfg, spec, x_worst)
    meta["series"] = {"n_max": trunc.n_max, "m_max": trunc.m_max, "dps": trunc.dps, "tol": trunc.tol}
    if np.any(interior):
        res = f_interior_series(xs[interior], spec, fa, trunc, full_output=True, time_budget=cfg.time_budget)
        vals[interior], errs[interior] = res.values, res.est_error
        meta["series"]["m_used"] = res.m_used
    if np.any(window):
        inner = window & (q <= 1.0)
        outer = window & (q > 1.0)
        if np.any(inner):
            vals[inner], errs[inner] = f_interior_mb(xs[inner], spec, fa, c_int, full_output=True)
        if np.any(outer):
            vals[outer], errs[outer] = f_exterior_mb(xs[outer], spec, fa, c_ext, full_output=True)
    if np.any(exterior):
        ext = _series_truncation(cfg, spec, float(np.min(xs[exterior])), exterior=True)
        meta["series_exterior"] = {"n_max": ext.n_max, "m_max": ext.m_max, "dps": ext.dps, "tol": ext.tol}
        res = f_exterior_series(xs[exterior], spec, fa, ext, full_output=True, time_budget=cfg.time_budget)
        vals[exterior], errs[exterior] = res.values, res.est_error
        meta["series_exterior"]["m_used"] = res.m_used
    return vals, errs, evaluator


def discrepancies(run: Run) -> np.ndarray:
    """Largest pairwise |f_i - f_j| at each point over the methods that produced a value."""
    stack = np.array([r.values for r in run.results.values()])
    out = np.zeros(len(run.xs))
    for i in range(len(run.xs)):
        col = stack[:, i]
        col = col[np.isfinite(col)]
        if len(col) > 1:
            out[i] = float(np.max(np.abs(col[:, None] - col[None, :])))
    return out


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _num(v: float) -> str:
    return "nan" if not math.isfinite(v) else format(float(v), ".17g")


def _json_num(v: float):
    return float(v) if math.isfinite(v) else None


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["methods"] = list(cfg.methods)
    return d


def _plain_meta(meta: dict) -> dict:
    return {k: v for k, v in meta.items() if not k.endswith("_grid")}


def format_solve(cfg: RunConfig, run: Run) -> str:
    disc = discrepancies(run)
    methods = [m for m in METHODS if m in run.results]
    if cfg.output == "json":
        points = []
        for i, x in enumerate(run.xs):
            rec = {"x": float(x), "methods": {}}
            for m in methods:
                r = run.results[m]
                rec["methods"][m] = {
                    "re": _json_num(r.values[i].real),
                    "im": _json_num(r.values[i].imag),
                    "err": _json_num(r.est_error[i]),
                }
            rec["max_discrepancy"] = float(disc[i])
            if run.evaluator:
                rec["series_evaluator"] = run.evaluator[i]
            points.append(rec)
        doc = {"version": __version__, "config": _config_dict(cfg), "meta": _plain_meta(run.meta), "points": points}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["x"]
    for m in methods:
        header += [f"{m}_re", f"{m}_im", f"{m}_err"]
    header.append("max_discrepancy")
    if run.evaluator:
        header.append("series_evaluator")
    writer.writerow(header)
    for i, x in enumerate(run.xs):
        row = [_num(x)]
        for m in methods:
            r = run.results[m]
            row += [_num(r.values[i].real), _num(r.values[i].imag), _num(r.est_error[i])]
        row.append(_num(disc[i]))
        if run.evaluator:
            row.append(run.evaluator[i])
        writer.writerow(row)
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_solve(cfg: RunConfig) -> int:
    run = run_methods(cfg)
    _emit(format_solve(cfg, run), cfg.out_path)
    return EXIT_OK


def _fa_rows(cfg: RunConfig, run: Run) -> list:
    spec = run.spec
    rows = []
    if "fA_exterior" in run.meta:
        rows.append(("contour quadrature, x -> infinity", complex(*run.meta["fA_exterior"])))
        rows.append(("contour quadrature, x = A", complex(*run.meta["fA_interior"])))
    if "series" in run.results:
        trunc = replace(_series_truncation(cfg, spec, 0.5 * spec.A), m_max=DEFAULT_M_CAP)
        try:
            S = exterior_constant_sum(spec, trunc, time_budget=cfg.time_budget)
            rows.append(("series, 1/(1 - S)", 1.0 / (1.0 - S)))
        except SeriesDivergenceError as exc:
            rows.append(("series, 1/(1 - S)", f"diverged: {exc}"))
    for m in ("nystrom", "picard"):
        if f"{m}_grid" in run.meta:
            rows.append((f"{m} at x = A", complex(nystrom_eval(run.meta[f"{m}_grid"], spec, spec.A))))
    return rows


def _method_eval(cfg: RunConfig, run: Run, method: str):
    spec = run.spec
    if method in ("nystrom", "picard"):
        grid = run.meta[f"{method}_grid"]
        return lambda x: nystrom_eval(grid, spec, x)
    c_int = ContourSettings(run.meta["sigma_interior"])
    c_ext = ContourSettings(run.meta["sigma_exterior"])
    fa = complex(*run.meta["fA_exterior"])
    if method == "mellin":
        return lambda x: f_interior_mb(x, spec, fa, c_int)
    return lambda x: _series_values(cfg, spec, np.asarray(x, dtype=float), fa, c_int, c_ext, {})[0]


def cmd_compare(cfg: RunConfig) -> int:
    if len(cfg.methods) < 2:
        raise ValueError("compare needs at least two methods")
    run = run_methods(cfg)
    methods = [m for m in METHODS if m in run.results]
    lines = [f"# dixon compare  a={cfg.a:g} A={cfg.A:g} lambda={complex(cfg.lambda_re, cfg.lambda_im)}  tol={cfg.tol:g}"]
    ok = True
    lines.append(f"{'pair':<20}{'max':>12}{'median':>12}  status")
    for i, m1 in enumerate(methods):
        for m2 in methods[i + 1:]:
            d = np.abs(run.results[m1].values - run.results[m2].values)
            d = d[np.isfinite(d)]
            if len(d) == 0:
                continue
            good = bool(np.max(d) < cfg.tol)
            ok &= good
            lines.append(f"{m1 + '/' + m2:<20}{np.max(d):>12.3e}{np.median(d):>12.3e}  {'ok' if good else 'FAIL'}")
    lines.append("")
    lines.append(f"{'residual sup-norm':<36}value")
    for m in methods:
        try:
            res = residual_supnorm(_method_eval(cfg, run, m), run.spec, cfg.residual_nodes, 41)
            lines.append(f"{m:<36}{res:.3e}")
        except DixonError as exc:
            lines.append(f"{m:<36}failed: {exc}")
    lines.append("")
    lines.append("f(A) closures")
    finite = []
    for label, val in _fa_rows(cfg, run):
        if isinstance(val, complex):
            finite.append(val)
            lines.append(f"  {label:<34}{val.real:.12g}{val.imag:+.3g}j")
        else:
            lines.append(f"  {label:<34}{val}")
    if len(finite) > 1:
        spread = max(abs(u - v) for u in finite for v in finite)
        lines.append(f"  {'spread':<34}{spread:.3e}")
    lines.append("")
    lines.append("PASS" if ok else "FAIL: discrepancies above tol")
    _emit("\n".join(lines) + "\n", cfg.out_path)
    return EXIT_OK if ok else EXIT_NONCONVERGENCE


def cmd_coeffs(m_max: int, k_max: int, output: str = "csv", out_path: str | None = None) -> int:
    if not (0 <= m_max <= 40 and 0 <= k_max <= 40):
        raise ValueError("coeffs needs 0 <= m_max, k_max <= 40")
    table = laurent_coeffs(m_max, k_max)
    rows = []
    for m in range(m_max + 1):
        fact = math.factorial(m)
        for k in range(k_max + 1):
            c = float(table.c[k, m])
            check = ""
            if k == 0:
                check = "pass" if abs(c - 1.0 / fact) <= 1e-12 / fact else "fail"
            elif k == 1:
                want = digamma(m + 1.0) / fact
                check = "pass" if abs(c - want) <= 1e-12 * abs(want) else "fail"
            rows.append((m, k, c, check))
    if output == "json":
        text = json.dumps([{"m": m, "k": k, "c_km": c, "check": chk or None} for m, k, c, chk in rows], indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "k", "c_km", "check"])
        for m, k, c, chk in rows:
            w.writerow([m, k, _num(c), chk])
        text = buf.getvalue()
    _emit(text, out_path)
    return EXIT_OK if all(chk != "fail" for *_, chk in rows) else EXIT_NONCONVERGENCE


def cmd_validate(level: str = "quick", suites=None, corrupt=None, out=None) -> int:
    from .validation import corrupt_table, run_suites

    out = sys.stdout if out is None else out

    hook = None
    if corrupt is not None:
        k, m = corrupt
        hook = lambda table: corrupt_table(table, k, m)  # noqa: E731
    reports = run_suites(level, suites, table_hook=hook)
    for rep in reports:
        out.write(f"[{'PASS' if rep.ok else 'FAIL'}] {rep.name} ({rep.seconds:.1f} s)\n")
        if rep.error:
            out.write(f"    error: {rep.error}\n")
        for c in rep.checks:
            out.write(f"    {'ok  ' if c.ok else 'FAIL'} {c.name}: {c.detail}\n")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_NONCONVERGENCE


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _grid(text: str):
    try:
        n, lo, hi = text.split(":")
        n, lo, hi = int(n), float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError("grid must look like N:lo:hi") from None
    if n < 1 or hi < lo:
        raise argparse.ArgumentTypeError("grid needs N >= 1 and lo <= hi")
    return n, lo, hi


def _points(text: str):
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("points must be comma-separated numbers") from None


def _methods(text: str):
    if text == "all":
        return METHODS
    chosen = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in chosen if m not in METHODS]
    if bad or not chosen:
        raise argparse.ArgumentTypeError(f"methods must be 'all' or a subset of {','.join(METHODS)}")
    return tuple(m for m in METHODS if m in chosen)


def _pair(text: str):
    try:
        k, m = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected K,M") from None
    return k, m


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--a", type=float, required=True, help="kernel exponent a > 0")
    p.add_argument("--A", type=float, required=True, help="interval end A >= 1")
    p.add_argument("--lambda", dest="lambda_re", type=float, required=True, help="real part of lambda")
    p.add_argument("--lambda-im", type=float, default=0.0, help="imaginary part of lambda")
    p.add_argument("--methods", type=_methods, default=METHODS, help="'all' or comma list of nystrom,picard,mellin,series")
    where = p.add_mutually_exclusive_group()
    where.add_argument("--grid", type=_grid, default=None, help="N:lo:hi uniform grid (default 21:0:A)")
    where.add_argument("--points", type=_points, default=None, help="comma-separated abscissas")
    p.add_argument("--tol", type=float, default=1e-8, help="series target error and compare threshold")
    p.add_argument("--sigma-interior", type=float, default=0.5)
    p.add_argument("--sigma-exterior", type=float, default=None, help="default 1 + a/2 when admissible")
    p.add_argument("--n-max", type=int, default=None, help="override the Neumann depth")
    p.add_argument("--m-max", type=int, default=None, help="override the pole depth")
    p.add_argument("--nystrom-n", type=int, default=512)
    p.add_argument("--time-budget", type=float, default=300.0, help="seconds allowed per series sweep")
    p.add_argument("--residual-nodes", type=int, default=256, help="quadrature nodes for compare residuals")
    p.add_argument("--output", choices=("csv", "json"), default="csv")
    p.add_argument("--out", dest="out_path", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dixon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("solve", help="evaluate f on a grid with the chosen methods"))
    _add_run_flags(sub.add_parser("compare", help="cross-method discrepancy, residual and f(A) summary"))
    pc = sub.add_parser("coeffs", help="Laurent coefficients of Gamma at its poles")
    pc.add_argument("--m-max", type=int, default=10)
    pc.add_argument("--k-max", type=int, default=4)
    pc.add_argument("--output", choices=("csv", "json"), default="csv")
    pc.add_argument("--out", dest="out_path", default=None)
    pv = sub.add_parser("validate", help="run the invariant suites")
    pv.add_argument("--level", choices=("quick", "full"), default="quick")
    pv.add_argument("--suite", action="append", default=None, help="run only this suite (repeatable)")
    pv.add_argument("--corrupt-laurent", type=_pair, default=None, help=argparse.SUPPRESS)
    return parser


def _config(args) -> RunConfig:
    grid = args.grid if args.grid is not None else (21, 0.0, args.A)
    return RunConfig(
        a=args.a, A=args.A, lambda_re=args.lambda_re, lambda_im=args.lambda_im, methods=args.methods,
        grid=None if args.points is not None else grid, points=args.points, tol=args.tol,
        sigma_interior=args.sigma_interior, sigma_exterior=args.sigma_exterior, n_max=args.n_max,
        m_max=args.m_max, nystrom_n=args.nystrom_n, output=args.output, out_path=args.out_path,
        time_budget=args.time_budget, residual_nodes=args.residual_nodes,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(_config(args))
        if args.command == "compare":
            return cmd_compare(_config(args))
        if args.command == "coeffs":
            return cmd_coeffs(args.m_max, args.k_max, args.output, args.out_path)
        return cmd_validate(args.level, args.suite, args.corrupt_laurent)
    except AdmissibilityError as exc:
        print(f"error: inadmissible parameters: {exc} (bound {exc.bound:.10g} at sigma={exc.sigma:g})", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DixonError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY


if __name__ == "__main__":
    sys.exit(main())
