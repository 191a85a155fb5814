"""Invariant suites run by ``dixon validate``.

Each suite returns a list of :class:`Check`. ``quick`` uses reduced depths
and one parameter set; ``full`` uses the acceptance parameter sets and
depths. Cross-method suites report what they find; they are not tuned to
pass.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import mpmath
import numpy as np
from scipy.special import roots_jacobi

from . import combinat, core, fredholm_oracle, mellin_quadrature, residue_series, specfun
from .core import NonConvergenceError, ProblemSpec


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class SuiteReport:
    name: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and all(c.ok for c in self.checks)


def acceptance_specs() -> list:
    """(0.5, 1, 0.5), (1, 1, 0.4) and a = 2.5, A = 2 at half the admissibility bound."""
    a = 2.5
    bound = float(specfun.beta(a, a + 1.0) / specfun.beta(a + 0.5, a + 0.5))
    return [ProblemSpec(0.5, 1.0, 0.5), ProblemSpec(1.0, 1.0, 0.4), ProblemSpec(a, 2.0, 0.5 * bound)]


def corrupt_table(table: specfun.LaurentTable, k: int, m: int, rel: float = 1e-3) -> specfun.LaurentTable:
    """Copy of ``table`` with c[k, m] (and its scaled twin) multiplied by 1 + rel."""
    c = table.c.copy()
    scaled = table.scaled.copy()
    c[k, m] = c[k, m] * (1 + rel)
    scaled[k, m] = scaled[k, m] * (1 + rel)
    return replace(table, c=c, scaled=scaled)


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _check(name, err, tol, fmt="{:.2e}"):
    return Check(name, bool(err < tol), f"{fmt.format(err)} (tol {tol:g})")


def _partition_count(r: int) -> int:
    # p(r) by the standard coin-change recurrence
    p = [1] + [0] * r
    for part in range(1, r + 1):
        for total in range(part, r + 1):
            p[total] += p[total - part]
    return p[r]


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def suite_specfun(level: str, **_):
    out = []
    table = specfun.laurent_coeffs(10, 12)
    err0 = max(_rel(table.c[0, m], 1.0 / math.factorial(m)) for m in range(11))
    err1 = max(_rel(table.c[1, m], float(mpmath.digamma(m + 1)) / math.factorial(m)) for m in range(11))
    out.append(_check("laurent c[0,m] = 1/m!", err0, 1e-12))
    out.append(_check("laurent c[1,m] = psi(m+1)/m!", err1, 1e-12))
    worst = 0.0
    for m in range(7):
        eps = 0.05
        approx = (-1) ** m / eps * sum(table.c[k, m] * eps**k for k in range(13))
        worst = max(worst, _rel(approx, float(mpmath.gamma(-m + eps))))
    out.append(_check("pole-approach reconstruction", worst, 1e-8))
    bern = specfun.laurent_coeffs_bernoulli(6, 8)
    out.append(_check("Bernoulli-form Laurent cross-check", float(np.max(np.abs(bern - table.c[:9, :7]))), 1e-10))

    rng = np.random.default_rng(7)
    s = rng.uniform(-8, 8, 50) + 1j * rng.uniform(-50, 50, 50)
    lhs = np.exp(specfun.log_gamma(s) + specfun.log_gamma(1 - s))
    rhs = np.array([complex(mpmath.pi / mpmath.sin(mpmath.pi * mpmath.mpc(v))) for v in s])
    out.append(_check("reflection formula", float(np.max(np.abs(lhs - rhs) / np.abs(rhs))), 1e-10))

    pg = max(
        _rel(specfun.polygamma(n, x), float(mpmath.polygamma(n, x)))
        for n in (0, 1, 3, 10, 25) for x in (0.3, 1.0, 7.5, 60.0)
    )
    out.append(_check("polygamma vs mpmath", pg, 1e-12))
    bz = max(
        _rel(specfun.bernoulli(2 * n), (-1) ** (n + 1) * 2 * math.factorial(2 * n) * specfun.riemann_zeta(2 * n)
             / (2 * math.pi) ** (2 * n))
        for n in range(1, 11)
    )
    out.append(_check("Bernoulli numbers via zeta", bz, 1e-10))
    return out


def suite_combinat(level: str, **_):
    out = []
    bad = [r for r in range(1, 21) if len(combinat.enumerate_partitions(r)) != _partition_count(r)]
    out.append(Check("partition counts r <= 20", not bad, f"mismatch at {bad}" if bad else "p(r) for r <= 20"))
    worst = 0.0
    for c in (0.0, 0.3):
        g = [math.exp(c)] * 7
        for n in range(1, 6):
            for r in range(7):
                worst = max(worst, _rel(combinat.power_derivative(g, n, r), n**r * math.exp(n * c)))
    out.append(_check("exponential case n^r e^(nc)", worst, 1e-12))
    mono = True
    for n in range(1, 6):
        for r in range(7):
            want = math.perm(n, r) * 2.0 ** (n - r) if r <= n else 0.0
            mono &= abs(combinat.power_derivative([2.0, 1.0] + [0.0] * 6, n, r) - want) <= 1e-12 * max(1.0, want)
    out.append(Check("monomial case", mono))
    return out


def suite_core(level: str, **_):
    out = []
    worst = 0.0
    for a in (0.3, 0.5, 1.0, 2.5):
        # x = t/(1-t) maps the integral to int_0^1 t^(a-1) (1-t)^a dt; both endpoint
        # factors go into the Jacobi weight, so the rule integrates g = 1
        t, w = roots_jacobi(40, a, a - 1.0)
        approx = float(np.sum(w)) / 2.0 ** (2.0 * a)
        worst = max(worst, _rel(approx, float(mpmath.beta(a, a + 1))))
    out.append(_check("beta integral by Gauss-Jacobi", worst, 1e-10))
    # B(a+sigma, a+1-sigma) is smallest at sigma = 1/2, so the bound on |lam| is
    # loosest there: admissibility anywhere implies admissibility at 1/2
    implied = True
    for lam in (0.2, 0.6, 1.0, 1.5, 1.6):
        spec = ProblemSpec(0.5, 1.0, lam)
        for sg in np.linspace(-0.45, 1.45, 20):
            if core.admissible(spec, float(sg)).ok and not core.admissible(spec, 0.5).ok:
                implied = False
    out.append(Check("admissible at any sigma implies admissible at 1/2", implied))
    spec = ProblemSpec(0.5, 1.0, 1.0)
    k_small = abs(core.fredholm_kernel(1e-8, 1.0, spec))
    out.append(_check("kernel vanishes as x -> 0", k_small, 1e-10))
    spec = ProblemSpec(0.5, 1.0, 0.5)
    res = min(core.residual_supnorm(lambda x, c=c: np.full(np.shape(x), c), spec, 128, 21) for c in (0.5, 1.0, 2.0))
    out.append(Check("constants are not solutions", res > 1e-3, f"smallest residual {res:.3g}"))
    return out


def suite_mellin(level: str, **_):
    out = []
    spec = ProblemSpec(0.5, 1.0, 0.5)
    fa = mellin_quadrature.f_at_A(spec, strict=False)
    xs = np.linspace(0.0, 0.9, 5 if level == "quick" else 21)
    vals = [mellin_quadrature.f_interior_mb(xs, spec, fa, mellin_quadrature.ContourSettings(sg)) for sg in (0.2, 0.5, 0.8)]
    shift = max(float(np.max(np.abs(v - vals[1]))) for v in vals)
    out.append(_check("interior contour-shift invariance", shift, 1e-9))
    try:
        fas = [mellin_quadrature.f_at_A(spec, mellin_quadrature.ContourSettings(sg), strict=False) for sg in (1.2, 1.4)]
        out.append(_check("exterior f(A) contour-shift invariance", abs(fas[0] - fas[1]), 1e-9))
    except core.AdmissibilityError as exc:
        out.append(Check("exterior f(A) contour-shift invariance", False, str(exc)))
    imag = float(np.max(np.abs(vals[1].imag)))
    out.append(_check("real lambda gives real f", imag, 1e-9))
    cl = mellin_quadrature.closures(spec)
    out.append(Check("f(A) closures agree", cl.gap < 1e-8,
                     f"exterior {cl.exterior.real:.10g}, interior {cl.interior.real:.10g}"))
    return out


def suite_residue(level: str, table_hook=None, **_):
    """Per-order residue sums against contour quadrature of the same integrand."""
    out = []
    cases = [(0.5, 0.5)] if level == "quick" else [(0.5, q) for q in (0.1, 0.5, 0.9)] + [(1.5, q) for q in (0.1, 0.5, 0.9)]
    n_lit = 2 if level == "quick" else 3
    table = specfun.laurent_coeffs(400, 6)
    if table_hook is not None:
        table = table_hook(table)
    worst_lit = 0.0
    for a, q in cases:
        spec = ProblemSpec(a, 1.0, 0.1)
        for n in range(1, n_lit + 1):
            quad, _ = mellin_quadrature.gamma_power_mb(n, q, a, 1.0, mellin_quadrature.ContourSettings(0.5, abs_tol=1e-13))
            m_max = 60 if q <= 0.5 else 400
            ser = math.fsum(residue_series.residue_interior(n, m, q, spec, table) for m in range(m_max + 1))
            worst_lit = max(worst_lit, abs(ser - quad[0].real))
    out.append(_check(f"term-by-term residues n <= {n_lit} vs quadrature", worst_lit, 1e-7))
    if level == "full":
        worst = 0.0
        for a, q in cases:
            spec = ProblemSpec(a, 1.0, 0.1)
            trunc = residue_series.SeriesTruncation(n_max=4, m_max=residue_series.DEFAULT_M_CAP, tol=1e-10,
                                                    rho=spec.rho, dps=40)
            for n in range(1, 5):
                quad, _ = mellin_quadrature.gamma_power_mb(n, q, a, 1.0, mellin_quadrature.ContourSettings(0.5, abs_tol=1e-13))
                ser, _ = residue_series.neumann_residue_sum(n, q, spec, trunc)
                worst = max(worst, abs(ser[0] - quad[0].real))
        out.append(_check("batched residue sums n <= 4 vs quadrature", worst, 1e-7))
    return out


def suite_oracle(level: str, **_):
    out = []
    specs = acceptance_specs()[:1] if level == "quick" else acceptance_specs()
    xs_frac = np.linspace(0.0, 0.9, 21)
    for spec in specs:
        tag = f"(a={spec.a:g}, A={spec.A:g}, lam={spec.lam.real:.6g})"
        xs = xs_frac * spec.A
        g128 = fredholm_oracle.nystrom_solve(spec, 128)
        g512 = fredholm_oracle.nystrom_solve(spec, 512)
        diff = float(np.max(np.abs(fredholm_oracle.nystrom_eval(g128, spec, xs) - fredholm_oracle.nystrom_eval(g512, spec, xs))))
        out.append(_check(f"Nystrom n=128 vs n=512 {tag}", diff, 1e-9))
        pic = fredholm_oracle.picard_solve(spec, 128)
        out.append(_check(f"Picard = Nystrom {tag}", float(np.max(np.abs(pic.f_values - g128.f_values))), 1e-10))
        bound = fredholm_oracle.picard_iteration_bound(spec.rho, 1e-13)
        it = pic.meta["iterations"]
        out.append(Check(f"Picard iterations within log(tol)/log(rho) + 2 {tag}", it <= bound, f"{it} vs {bound}"))
        res = core.residual_supnorm(lambda x, g=g512, s=spec: fredholm_oracle.nystrom_eval(g, s, x), spec, 512, 41)
        out.append(_check(f"Nystrom residual {tag}", res, 1e-8))
        out.append(Check(f"Nystrom f(0) = 1 {tag}", fredholm_oracle.nystrom_eval(g512, spec, 0.0) == 1.0))
    return out


def suite_cross(level: str, **_):
    """Mellin-Barnes and residue-series solutions against the Nystrom solution."""
    out = []
    specs = acceptance_specs()[:1] if level == "quick" else acceptance_specs()
    for spec in specs:
        tag = f"(a={spec.a:g}, A={spec.A:g}, lam={spec.lam.real:.6g})"
        xs = np.linspace(0.0, 0.9 * spec.A, 5 if level == "quick" else 21)
        fa = mellin_quadrature.f_at_A(spec, strict=False)
        mb = mellin_quadrature.f_interior_mb(xs, spec, fa)
        ny = fredholm_oracle.nystrom_eval(fredholm_oracle.nystrom_solve(spec, 512), spec, xs)
        out.append(_check(f"Mellin vs Nystrom {tag}", float(np.max(np.abs(mb - ny))), 1e-6))
        tol = 1e-6 if level == "quick" else 1e-8
        try:
            trunc = residue_series.auto_truncation(spec, tol, float(xs[-1]))
            ser = residue_series.f_interior_series(xs, spec, fa, trunc, time_budget=10.0 if level == "quick" else 60.0)
            out.append(_check(f"series vs Mellin {tag}", float(np.max(np.abs(ser - mb))), 10 * tol))
        except NonConvergenceError as exc:
            out.append(Check(f"series vs Mellin {tag}", False, str(exc)))
    return out


SUITES = {
    "specfun": suite_specfun,
    "combinat": suite_combinat,
    "core": suite_core,
    "mellin_quadrature": suite_mellin,
    "residue_series": suite_residue,
    "fredholm_oracle": suite_oracle,
    "cross_method": suite_cross,
}


def run_suites(level: str = "quick", names=None, *, table_hook=None) -> list:
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    reports = []
    for name in names or SUITES:
        rep = SuiteReport(name)
        t0 = time.monotonic()
        try:
            rep.checks = SUITES[name](level, table_hook=table_hook)
        except Exception as exc:  # a crashing suite is a failing suite
            rep.error = f"{type(exc).__name__}: {exc}"
        rep.seconds = time.monotonic() - t0
        reports.append(rep)
    return reports
