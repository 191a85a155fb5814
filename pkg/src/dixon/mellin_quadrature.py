"""Solution values by direct quadrature of the Mellin-Barnes representations.

On a vertical line s = sigma + i t the integrals are written with the
contour measure folded in, (1/2 pi i) ds = (1/2 pi) dt, and integrated in t
by Gauss-Legendre panels of unit width accumulated outward from t = 0. Each
panel is bisected adaptively while the two-level estimates disagree.

Interior (0 <= x <= A, -a < sigma < 1):
    f(x) = 1 - lam fA J(x),  J(x) = (1/2pi) int K(s) (x/A)^(1-s) / (1-s) dt
Exterior (x >= A, 1 < sigma < a+1):
    f(x) = fA + lam fA (1/2pi) int K(s) [1 - (x/A)^(1-s)] / (1-s) dt
with K(s) = B(a+s, a+1-s) / (B0 - lam B(a+s, a+1-s)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .core import (
    AdmissibilityError,
    DixonError,
    NonConvergenceError,
    ProblemSpec,
    admissible,
    require_admissible,
)
from .specfun import beta, log_gamma

SIGMA_POLE_GUARD = 1e-6
MIN_MARGIN = 1e-10
_MAX_BISECT = 10


class ClosureMismatchError(DixonError):
    """The two independent determinations of f(A) disagree."""

    def __init__(self, message: str, *, exterior: complex, interior: complex, tol: float):
        super().__init__(message)
        self.exterior = exterior
        self.interior = interior
        self.tol = tol


@dataclass(frozen=True)
class ContourSettings:
    sigma: float
    t_max: float = 200.0
    abs_tol: float = 1e-10
    panel: int = 16

    def __post_init__(self):
        if abs(self.sigma - 1.0) < SIGMA_POLE_GUARD:
            raise ValueError(f"sigma={self.sigma} is within {SIGMA_POLE_GUARD} of the pole at s = 1")
        if self.t_max <= 0 or self.abs_tol <= 0 or self.panel < 2:
            raise ValueError("t_max, abs_tol must be positive and panel >= 2")


def default_interior_contour(spec: ProblemSpec, **kw) -> ContourSettings:
    return ContourSettings(sigma=0.5, **kw)


def default_exterior_contour(spec: ProblemSpec, **kw) -> ContourSettings:
    """sigma = 1 + a/2 when admissible there, else halfway to the admissibility edge.

    Moving right of s = 1 the bound tightens, so for larger |lam| the midpoint
    of (1, a+1) crosses a zero of B0 - lam B; the fallback stays inside.
    """
    a = spec.a
    sigma = 1.0 + 0.5 * a
    if admissible(spec, sigma).margin > 0.05 * abs(spec.lam):
        return ContourSettings(sigma=sigma, **kw)
    lo = 1.0 + SIGMA_POLE_GUARD
    require_admissible(spec, lo)
    edge = brentq(lambda sg: admissible(spec, sg).margin, lo, sigma, xtol=1e-12)
    return ContourSettings(sigma=1.0 + 0.5 * (edge - 1.0), **kw)


def _margin_check(spec: ProblemSpec, sigma: float) -> None:
    adm = require_admissible(spec, sigma)
    if adm.margin < MIN_MARGIN:
        raise AdmissibilityError(
            f"admissibility margin {adm.margin:.3g} at sigma={sigma:g} is too small for a stable denominator",
            bound=adm.bound,
            sigma=sigma,
        )


def beta_mellin(s, a: float):
    """B(a+s, a+1-s), the Mellin transform of x^a (1+x)^(-1-2a)."""
    s = np.asarray(s, dtype=complex)
    return np.exp(log_gamma(a + s) + log_gamma(a + 1.0 - s) - log_gamma(2.0 * a + 1.0))


def kernel_ratio(s, spec: ProblemSpec):
    """B(a+s, a+1-s) / (B0 - lam B(a+s, a+1-s)); guarded by admissibility at Re s."""
    s_arr = np.asarray(s, dtype=complex)
    for sigma in np.unique(np.atleast_1d(s_arr.real)):
        _margin_check(spec, float(sigma))
    bm = beta_mellin(s_arr, spec.a)
    return bm / (spec.b0 - spec.lam * bm)


@lru_cache(maxsize=8)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def _panel(integrand, lo, hi, n):
    x, w = _gl(n)
    half = 0.5 * (hi - lo)
    t = lo + half * (x + 1.0)
    return half * (w @ integrand(t))


def _adaptive_panel(integrand, lo, hi, n, tol, depth=0):
    whole = _panel(integrand, lo, hi, n)
    mid = 0.5 * (lo + hi)
    left = _panel(integrand, lo, mid, n)
    right = _panel(integrand, mid, hi, n)
    halves = left + right
    diff = np.abs(halves - whole)
    if np.max(diff) <= tol or depth >= _MAX_BISECT:
        return halves, diff
    l_val, l_err = _adaptive_panel(integrand, lo, mid, n, 0.5 * tol, depth + 1)
    r_val, r_err = _adaptive_panel(integrand, mid, hi, n, 0.5 * tol, depth + 1)
    return l_val + r_val, l_err + r_err


def contour_integral(integrand, contour: ContourSettings, nx: int):
    """(1/2pi) int_{-inf}^{inf} integrand(t) dt for an integrand returning shape (len(t), nx).

    Returns (values, error_estimate), each of length nx. The error estimate is
    the accumulated panel-refinement difference plus a tail bound that
    assumes the e^(-pi |t|) decay of the gamma-ratio integrands.
    """
    tol = contour.abs_tol
    panel_tol = tol / 100.0
    total = np.zeros(nx, dtype=complex)
    err = np.zeros(nx)
    quiet = 0
    k = 0
    last = np.zeros(nx)
    while True:
        if k + 1 > contour.t_max:
            raise NonConvergenceError(
                f"contour integral not converged by t_max={contour.t_max} (last panel pair {np.max(last):.3g})"
            )
        up, up_err = _adaptive_panel(integrand, float(k), float(k + 1), contour.panel, panel_tol)
        dn, dn_err = _adaptive_panel(integrand, float(-k - 1), float(-k), contour.panel, panel_tol)
        pair = up + dn
        total += pair
        err += up_err + dn_err
        last = np.abs(up) + np.abs(dn)
        k += 1
        quiet = quiet + 1 if np.max(last) < tol / 10.0 else 0
        if quiet >= 2:
            break
    tail = last * math.exp(-math.pi) / (1.0 - math.exp(-math.pi))
    scale = 1.0 / (2.0 * math.pi)
    return total * scale, (err + tail) * scale


def _check_sigma(spec: ProblemSpec, contour: ContourSettings, lo: float, hi: float, what: str):
    if not (lo < contour.sigma < hi):
        raise ValueError(f"{what} needs sigma in ({lo:g}, {hi:g}), got {contour.sigma}")
    _margin_check(spec, contour.sigma)


def _as_grid(x):
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def interior_integral(x, spec: ProblemSpec, contour: ContourSettings):
    """J(x) = (1/2pi i) int K(s) (x/A)^(1-s) ds/(1-s) on Re s = sigma in (-a, 1)."""
    xs, _ = _as_grid(x)
    if np.any(xs < 0) or np.any(xs > spec.A):
        raise ValueError("interior evaluation needs 0 <= x <= A")
    _check_sigma(spec, contour, -spec.a, 1.0, "interior contour")
    sigma = contour.sigma
    logq = np.where(xs > 0, np.log(np.where(xs > 0, xs, 1.0) / spec.A), 0.0)
    zero = xs == 0

    def integrand(t):
        s = sigma + 1j * t
        base = kernel_ratio(s, spec) / (1.0 - s)
        powq = np.exp(np.outer(1.0 - s, logq))
        powq[:, zero] = 0.0
        return base[:, None] * powq

    return contour_integral(integrand, contour, len(xs))


def f_interior_mb(x, spec: ProblemSpec, fA: complex, contour: ContourSettings | None = None, *, full_output=False):
    """f(x) = 1 - lam fA J(x) for 0 <= x <= A. f(0) = 1 exactly."""
    contour = contour or default_interior_contour(spec)
    xs, scalar = _as_grid(x)
    J, err = interior_integral(xs, spec, contour)
    vals = 1.0 - spec.lam * fA * J
    errs = abs(spec.lam * fA) * err
    if scalar:
        vals, errs = vals[0], errs[0]
    return (vals, errs) if full_output else vals


def exterior_integral(x, spec: ProblemSpec, contour: ContourSettings):
    """(1/2pi i) int K(s) [1 - (x/A)^(1-s)] ds/(1-s) on Re s = sigma in (1, a+1)."""
    xs, _ = _as_grid(x)
    if np.any(xs < spec.A):
        raise ValueError("exterior evaluation needs x >= A")
    _check_sigma(spec, contour, 1.0, spec.a + 1.0, "exterior contour")
    sigma = contour.sigma
    logq = np.log(xs / spec.A)

    def integrand(t):
        s = sigma + 1j * t
        base = kernel_ratio(s, spec) / (1.0 - s)
        return base[:, None] * (1.0 - np.exp(np.outer(1.0 - s, logq)))

    return contour_integral(integrand, contour, len(xs))


def f_exterior_mb(x, spec: ProblemSpec, fA: complex, contour: ContourSettings | None = None, *, full_output=False):
    """f(x) = fA + lam fA (1/2pi i) int K(s)[1 - (x/A)^(1-s)] ds/(1-s) for x >= A."""
    contour = contour or default_exterior_contour(spec)
    xs, scalar = _as_grid(x)
    I, err = exterior_integral(xs, spec, contour)
    vals = fA + spec.lam * fA * I
    errs = abs(spec.lam * fA) * err
    if scalar:
        vals, errs = vals[0], errs[0]
    return (vals, errs) if full_output else vals


@dataclass(frozen=True)
class Closure:
    """f(A) from the limit x -> infinity (exterior) and from x = A in the interior form."""

    exterior: complex
    exterior_err: float
    interior: complex
    interior_err: float
    sigma_exterior: float
    sigma_interior: float

    @property
    def gap(self) -> float:
        return abs(self.exterior - self.interior)

    @property
    def tolerance(self) -> float:
        return 10.0 * (self.exterior_err + self.interior_err)


def closures(
    spec: ProblemSpec,
    contour: ContourSettings | None = None,
    interior_contour: ContourSettings | None = None,
) -> Closure:
    contour = contour or default_exterior_contour(spec)
    interior_contour = interior_contour or default_interior_contour(spec, abs_tol=contour.abs_tol)
    _check_sigma(spec, contour, 1.0, spec.a + 1.0, "f(A) closure")
    sigma = contour.sigma

    def integrand(t):
        s = sigma + 1j * t
        return (kernel_ratio(s, spec) / (1.0 - s))[:, None]

    J_ext, e_ext = contour_integral(integrand, contour, 1)
    J_int, e_int = interior_integral(spec.A, spec, interior_contour)
    lam = spec.lam
    fa_ext = 1.0 / (1.0 + lam * J_ext[0])
    fa_int = 1.0 / (1.0 + lam * J_int[0])
    return Closure(
        exterior=complex(fa_ext),
        exterior_err=float(abs(fa_ext) ** 2 * abs(lam) * e_ext[0]),
        interior=complex(fa_int),
        interior_err=float(abs(fa_int) ** 2 * abs(lam) * e_int[0]),
        sigma_exterior=sigma,
        sigma_interior=interior_contour.sigma,
    )


def f_at_A(spec: ProblemSpec, contour: ContourSettings | None = None, *, strict: bool = True, full_output=False):
    """f(A) from fA [1 + lam (1/2pi i) int K(s) ds/(1-s)] = 1 on Re s in (1, a+1).

    The x = A closure of the interior form is computed alongside; with
    ``strict`` a disagreement beyond 10x the combined error estimates raises
    :class:`ClosureMismatchError`.
    """
    cl = closures(spec, contour)
    if strict and cl.gap > cl.tolerance:
        raise ClosureMismatchError(
            f"f(A) closures disagree: exterior {cl.exterior:.12g} vs interior {cl.interior:.12g}",
            exterior=cl.exterior,
            interior=cl.interior,
            tol=cl.tolerance,
        )
    return (cl.exterior, cl) if full_output else cl.exterior


def fprime_interior_mb(x, spec: ProblemSpec, fA: complex, contour: ContourSettings | None = None, *, full_output=False):
    """f'(x) = -lam fA / A * (1/2pi i) int K(s) (x/A)^(-s) ds for 0 < x < A."""
    contour = contour or default_interior_contour(spec)
    xs, scalar = _as_grid(x)
    if np.any(xs <= 0) or np.any(xs >= spec.A):
        raise ValueError("derivative evaluation needs 0 < x < A")
    _check_sigma(spec, contour, -spec.a, 1.0, "interior contour")
    sigma = contour.sigma
    logq = np.log(xs / spec.A)

    def integrand(t):
        s = sigma + 1j * t
        return kernel_ratio(s, spec)[:, None] * np.exp(np.outer(-s, logq))

    I, err = contour_integral(integrand, contour, len(xs))
    scale = -spec.lam * fA / spec.A
    vals, errs = scale * I, abs(scale) * err
    if scalar:
        vals, errs = vals[0], errs[0]
    return (vals, errs) if full_output else vals


def gamma_power_mb(n: int, x, a: float, A: float, contour: ContourSettings, *, exterior: bool = False):
    """(1/2pi i) int [G(a+s) G(a+1-s)]^n w(s) ds for one Neumann order n.

    w(s) = (x/A)^(1-s)/(1-s) on an interior line, or [1 - (x/A)^(1-s)]/(1-s)
    on an exterior line. Returns (values, errors); this is the quadrature
    side of the per-order residue identity.
    """
    xs, _ = _as_grid(x)
    sigma = contour.sigma
    lo, hi = (1.0, a + 1.0) if exterior else (-a, 1.0)
    if not (lo < sigma < hi):
        raise ValueError(f"sigma must lie in ({lo:g}, {hi:g})")
    logq = np.log(xs / A)

    def integrand(t):
        s = sigma + 1j * t
        g = np.exp(n * (log_gamma(a + s) + log_gamma(a + 1.0 - s))) / (1.0 - s)
        powq = np.exp(np.outer(1.0 - s, logq))
        return g[:, None] * ((1.0 - powq) if exterior else powq)

    return contour_integral(integrand, contour, len(xs))


def neumann_ratio(spec: ProblemSpec, sigma: float) -> float:
    """|lam| B(a+sigma, a+1-sigma) / B0."""
    return abs(spec.lam) * float(beta(spec.a + sigma, spec.a + 1.0 - sigma)) / spec.b0


def with_sigma(contour: ContourSettings, sigma: float) -> ContourSettings:
    return replace(contour, sigma=sigma)
