"""Neumann expansion of the contour solution, evaluated as a double residue series.

Expanding lam K(s) = sum_n (lam B(a+s, a+1-s) / B0)^n turns the contour
integral into a sum over Neumann orders n. The n-th integrand carries
[G(a+s) G(a+1-s)]^n, which has an order-n pole at every s = -a-m. Each
residue follows from the Leibniz rule applied to

  * d^r/ds^r [((s+a+m) G(a+s))^n]   at the pole (Laurent coefficients),
  * d^v/ds^v [G(a+1-s)^n]           at the pole (derivatives of Gamma),
  * d^j/ds^j of the x-dependent weight, in closed form,

with both power derivatives given by Faa di Bruno partition sums. The
one-residue-at-a-time functions below follow that recipe literally; the
grid evaluators use an equivalent but cancellation-free ordering (see the
notes above ``_sweep``).

Summing over poles m is where precision goes: terms peak near
m ~ 2an / -log(x/A) at a size that can exceed the result by many digits.
Double precision handles small a away from x = A. ``dps`` in
:class:`SeriesTruncation` switches the arithmetic to mpmath, and
:func:`choose_dps` picks a precision from the predicted cancellation.

The exterior representation carries an x-independent part whose pole sum
grows like sum_m m^(2an-1); it never settles, and the exterior evaluators
report that as :class:`SeriesDivergenceError`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import mpmath
import numpy as np

from .combinat import enumerate_partitions, power_derivative
from .core import NonConvergenceError, ProblemSpec
from .specfun import (
    EULER_GAMMA,
    LaurentTable,
    digamma,
    gamma_derivs,
    hurwitz_zeta,
    laurent_coeffs,
    log_gamma,
    polygamma,
    riemann_zeta,
)

EPS = np.finfo(float).eps
DEFAULT_M_CAP = 20000


class SeriesDivergenceError(NonConvergenceError):
    """Terms of a residue series stopped decreasing before the m cap."""


@dataclass(frozen=True)
class SeriesTruncation:
    """Neumann depth, pole depth, target absolute error and working precision.

    ``dps`` is None for double precision or the number of mpmath digits.
    """

    n_max: int
    m_max: int
    tol: float
    rho: float
    dps: int | None = None

    def __post_init__(self):
        if self.n_max < 1 or self.m_max < 1:
            raise ValueError("n_max and m_max must be positive")
        if not 0 < self.rho < 1:
            raise ValueError(f"Neumann ratio rho={self.rho:.6g} must lie in (0, 1)")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.dps is not None and self.dps < 15:
            raise ValueError("dps below 15 is less than double precision; use None")

    @property
    def n_tail(self) -> float:
        return self.rho ** (self.n_max + 1) / (1.0 - self.rho)


def choose_n_max(rho: float, tol: float) -> int:
    """Smallest n with rho^(n+1) / (1 - rho) <= tol / 2."""
    if not 0 < rho < 1:
        raise ValueError(f"Neumann ratio rho={rho:.6g} must lie in (0, 1)")
    n = math.log(0.5 * tol * (1.0 - rho)) / math.log(rho) - 1.0
    return max(1, math.ceil(n))


def choose_m_max(spec: ProblemSpec, n_max: int, q_worst: float, tol: float, cap: int = DEFAULT_M_CAP) -> int:
    """Pole depth past which every order-n term bound is below tol * 1e-3 at x = q_worst A.

    The order-n terms behave like (lam / (G(a) G(a+1)))^n (G(2a+1+m)/m!)^n q^(a+1+m),
    which first grows like m^(2an) before q^m wins, so a plain geometric
    bound on q^m would stop far too early.
    """
    if not 0 < q_worst < 1:
        raise ValueError("q_worst must lie in (0, 1)")
    a = spec.a
    lq = math.log(q_worst)
    lb = math.log(abs(spec.lam)) - math.lgamma(a) - math.lgamma(a + 1.0)
    target = math.log(tol * 1e-3)
    m_peak = int(2.0 * a * n_max / -lq) + 1

    def log_term(m):
        lu = math.lgamma(2.0 * a + 1.0 + m) - math.lgamma(m + 1.0)
        return max(n * (lu + lb) for n in range(1, n_max + 1)) + (a + 1.0 + m) * lq

    m = m_peak
    while m < cap and log_term(m) > target:
        m = int(m * 1.1) + 1
    # the sweep stops on its own once terms are quiet; the margin only covers
    # the log-power and coefficient factors this estimate leaves out
    return min(int(1.5 * m) + 50, cap)


def auto_truncation(
    spec: ProblemSpec,
    tol: float = 1e-9,
    x_worst: float | None = None,
    *,
    dps="auto",
    m_cap: int = DEFAULT_M_CAP,
) -> SeriesTruncation:
    """Truncation for interior evaluation up to x_worst (default 0.95 A).

    ``dps="auto"`` asks :func:`choose_dps` for a working precision; pass None
    to force double precision or an integer to fix the mpmath digits.
    """
    rho = spec.rho
    n_max = choose_n_max(rho, tol)
    q = 0.95 if x_worst is None else min(max(x_worst / spec.A, 1e-3), 0.95)
    m_max = choose_m_max(spec, n_max, q, tol, m_cap)
    if dps == "auto":
        dps = choose_dps(spec, n_max, q, tol)
    return SeriesTruncation(n_max=n_max, m_max=m_max, tol=tol, rho=rho, dps=dps)


def exterior_truncation(
    spec: ProblemSpec,
    tol: float = 1e-9,
    x_min: float | None = None,
    *,
    dps="auto",
    m_cap: int = DEFAULT_M_CAP,
) -> SeriesTruncation:
    """Truncation for the exterior x-dependent sum on x >= x_min (default 1.05 A).

    The order-n x-dependent integral lives right of the pole at s = 1, where
    the Neumann ratio reaches |lam| rather than rho, so orders decay like |lam|^n.
    """
    ratio = abs(spec.lam)
    if not 0 < ratio < 1:
        raise ValueError(f"exterior series needs 0 < |lam| < 1, got {ratio:.6g}")
    n_max = choose_n_max(ratio, tol)
    q = 1.0 / 1.05 if x_min is None else min(max(spec.A / x_min, 1e-3), 0.95)
    m_max = choose_m_max(spec, n_max, q, tol, m_cap)
    if dps == "auto":
        dps = choose_dps(spec, n_max, q, tol)
    return SeriesTruncation(n_max=n_max, m_max=m_max, tol=tol, rho=ratio, dps=dps)


def build_table(trunc: SeriesTruncation, m_max: int | None = None) -> LaurentTable:
    """Laurent table deep enough for the per-residue functions under ``trunc``."""
    return laurent_coeffs(trunc.m_max if m_max is None else m_max, max(trunc.n_max, 2), dps=trunc.dps)


# ---------------------------------------------------------------------------
# One residue at a time
# ---------------------------------------------------------------------------

def pole_power_limit(n: int, r: int, m: int, table: LaurentTable, *, scaled: bool = False):
    """lim_{s->-a-m} d^r/ds^r [((s+a+m) G(a+s))^n].

    Near the pole (s+a+m) G(a+s) = (-1)^m sum_k c[k, m] u^k with u = s+a+m,
    so its j-th derivative at u = 0 is (-1)^m j! c[j, m]. With ``scaled``
    the result is multiplied by ((-1)^m m!)^n, which keeps it O(1) in m.
    """
    if r > table.k_max:
        raise IndexError(f"Laurent table depth k_max={table.k_max} < r={r}")
    col = table.column(m, r, scaled=scaled)
    sign = 1 if scaled or m % 2 == 0 else -1
    g = [sign * math.factorial(j) * col[j] for j in range(r + 1)]
    return power_derivative(g, n, r)


def gamma_power_derivative(n: int, nu: int, m: int, a: float, *, scaled: bool = False):
    """d^nu/ds^nu [G(a+1-s)^n] at s = -a-m, including the (-1)^nu from w = a+1-s.

    ``scaled`` divides by G(2a+1+m)^n.
    """
    g = gamma_derivs(2.0 * a + 1.0 + m, nu, scaled=scaled)
    val = power_derivative(g, n, nu)
    return -val if nu % 2 else val


def _weight_interior_derivs(j_max: int, L: float, c: float):
    """j-th s-derivatives of q^(1-s)/(1-s) at 1-s = c, divided by q^c (q = e^L)."""
    out = []
    for j in range(j_max + 1):
        out.append(math.factorial(j) * math.fsum(
            (-L) ** (j - k) / (math.factorial(j - k) * c ** (k + 1)) for k in range(j + 1)
        ))
    return out


def residue_interior(n: int, m: int, x: float, spec: ProblemSpec, table: LaurentTable):
    """Res_{s=-a-m} [G(a+s) G(a+1-s)]^n (x/A)^(1-s) / (1-s), by the Leibniz rule.

    Assembled one residue at a time from :func:`pole_power_limit` and
    :func:`gamma_power_derivative`; the summation routines use the batched
    engine below, and tests compare the two.
    """
    a, A = spec.a, spec.A
    if not 0 <= x <= A:
        raise ValueError("residue_interior needs 0 <= x <= A")
    if x == 0:
        return 0.0
    L = math.log(x / A)
    c = a + 1.0 + m
    E = _weight_interior_derivs(n - 1, L, c)
    P = [pole_power_limit(n, r, m, table, scaled=True) for r in range(n)]
    Q = [gamma_power_derivative(n, v, m, a, scaled=True) for v in range(n)]
    total = []
    for r in range(n):
        inner = math.fsum(math.comb(n - 1 - r, v) * Q[v] * E[n - 1 - r - v] for v in range(n - r))
        total.append(math.comb(n - 1, r) * P[r] * inner)
    log_scale = n * (math.lgamma(2.0 * a + 1.0 + m) - math.lgamma(m + 1.0)) + c * L
    sign = -1.0 if (m * n) % 2 else 1.0
    return sign * math.exp(log_scale) * math.fsum(total) / math.factorial(n - 1)


def residue_interior_printed(n: int, m: int, x: float, spec: ProblemSpec, table: LaurentTable):
    """The same residue from the compact closed form, assembled term by term.

    That form expands the Gamma(a+1-s)^n derivatives in w-derivatives of
    Gamma at 2a+1+m without the (-1)^nu chain-rule sign. It is kept to show
    the effect: it matches :func:`residue_interior` for n = 1 only.
    """
    a, A = spec.a, spec.A
    if x == 0:
        return 0.0
    L = math.log(x / A)
    c = a + 1.0 + m
    w = 2.0 * a + 1.0 + m
    # evaluated in mpmath only so that G(w)^n and m!^n stay representable
    col = [mpmath.mpf(v) for v in table.column(m, n, scaled=False)]
    gd = gamma_derivs(w, n, dps=30)
    fact_m = mpmath.factorial(m)

    def pole_sum(r):
        if r == 0:
            return col[0] ** n
        acc = mpmath.mpf(0)
        for part in enumerate_partitions(r):
            if part.l > n:
                continue
            num = math.comb(n, part.l) * math.factorial(part.l)
            for j, bj in enumerate(part.b, start=1):
                num *= col[j] ** bj
            den = fact_m ** (n - part.l)
            for bj in part.b:
                den *= math.factorial(bj)
            acc += num / den
        return acc

    def gamma_sum(v):
        if v == 0:
            return gd[0] ** n
        acc = mpmath.mpf(0)
        for part in enumerate_partitions(v):
            if part.l > n:
                continue
            num = math.comb(n, part.l) * math.factorial(part.l) * gd[0] ** (n - part.l)
            for j, bj in enumerate(part.b, start=1):
                num *= (gd[j] / math.factorial(j)) ** bj
            den = 1
            for bj in part.b:
                den *= math.factorial(bj)
            acc += num / den
        return acc

    total = mpmath.mpf(0)
    for r in range(n):
        for v in range(n - r):
            j = n - 1 - r - v
            ksum = math.fsum(
                (-1) ** k * L ** (j - k) / (math.factorial(j - k) * c ** (k + 1)) for k in range(j + 1)
            )
            total += (-1) ** j * ksum * pole_sum(r) * gamma_sum(v)
    sign = -1.0 if (m * n) % 2 else 1.0
    return float(sign * mpmath.exp(c * L) * total)


# ---------------------------------------------------------------------------
# Batched engine
# ---------------------------------------------------------------------------
#
# The Leibniz/Faa di Bruno expansion above multiplies two factors whose
# derivatives grow like exp(+psi(m) u) and exp(-psi(m) u); the product is
# O(1) but its pieces are not, and the cancellation costs many digits once
# n and m are large. The engine therefore forms the Taylor series of the
# logarithm of the whole integrand around the pole (u = s + a + m),
#
#   ell(u) = log[(-1)^m m! u G(a+s)] + log[G(a+1-s) / G(2a+1+m)],
#
# whose coefficients are O(1), and exponentiates n ell(u) + log(weight) with
# the complete Bell polynomial recurrence B_k = (1/k) sum_j j h_j B_(k-j).
# The order-n residue is the u^(n-1) coefficient: the same Leibniz sum,
# summed in a stable order. Orders are then folded together per pole, which
# leaves a polynomial in log(x/A) to evaluate on the grid.
#
# Summing over m still cancels: terms peak near m ~ 2an / -log(x/A) at a size
# that can exceed the result by tens of digits. A float shadow of the absolute
# values, kept in log space, measures this and feeds the rounding estimate.

class _FloatOps:
    dps = None
    eps = EPS
    one = 1.0

    def num(self, v):
        return float(v)

    def fsum(self, it):
        return math.fsum(it)

    def lgamma(self, v):
        return math.lgamma(v)

    def polygamma(self, k, w):
        return polygamma(k, w)

    def exp(self, v):
        try:
            return math.exp(v)
        except OverflowError as exc:
            raise SeriesDivergenceError(
                "residue terms overflow double precision; run the series with dps set"
            ) from exc

    def log(self, v):
        return math.log(v)

    def vexp(self, v):
        return np.exp(v)

    def vlog(self, v):
        return np.log(v)

    def vec(self, xs):
        return np.asarray(xs, dtype=float)

    def zeros(self, shape):
        return np.zeros(shape)

    def to_float(self, arr):
        return np.asarray(arr, dtype=float)


class _MpOps:
    def __init__(self, dps: int):
        self.dps = dps
        self.eps = 10.0 ** (1 - dps)
        self.one = mpmath.mpf(1)

    def num(self, v):
        return mpmath.mpf(v)

    def fsum(self, it):
        return mpmath.fsum(it)

    def lgamma(self, v):
        return mpmath.loggamma(v)

    def polygamma(self, k, w):
        return mpmath.polygamma(k, w)

    def exp(self, v):
        return mpmath.exp(v)

    def log(self, v):
        return mpmath.log(v)

    def vexp(self, v):
        return np.array([mpmath.exp(t) for t in np.atleast_1d(v)], dtype=object)

    def vlog(self, v):
        return np.array([mpmath.log(t) for t in np.atleast_1d(v)], dtype=object)

    def vec(self, xs):
        return np.array([mpmath.mpf(float(v)) for v in xs], dtype=object)

    def zeros(self, shape):
        out = np.empty(shape, dtype=object)
        out.fill(mpmath.mpf(0))
        return out

    def to_float(self, arr):
        arr = np.asarray(arr, dtype=object)
        return np.array([float(v) for v in arr.ravel()], dtype=float).reshape(arr.shape)


def _ops(dps):
    return _FloatOps() if dps is None else _MpOps(dps)


class _NullCtx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _with_dps(dps):
    return mpmath.workdps(dps) if dps is not None else _NullCtx()


def log_series(coeffs, fsum=math.fsum):
    """Taylor coefficients of log(A(u)) for A(u) = sum coeffs[k] u^k with coeffs[0] = 1 (entry 0 is 0)."""
    out = [0 * coeffs[0]]
    for k in range(1, len(coeffs)):
        out.append(coeffs[k] - fsum(j * out[j] * coeffs[k - j] for j in range(1, k)) / k)
    return out


def exp_series(h, k_max: int, fsum=math.fsum):
    """Taylor coefficients of exp(h(u)) with h[0] = 0, via the complete Bell recurrence."""
    out = [1 + 0 * h[0]]
    for k in range(1, k_max + 1):
        out.append(fsum(j * h[j] * out[k - j] for j in range(1, k + 1)) / k)
    return out


def _polygamma_rows(a: float, m_cap: int, k_max: int, ops):
    """psi^(k)(2a+1+m) for k < k_max and m <= m_cap.

    Evaluated once at the top and carried down with
    psi^(k)(w) = psi^(k)(w+1) + (-1)^(k+1) k! / w^(k+1), which adds terms of
    the sign of the result and so loses nothing.
    """
    w_top = ops.num(2 * a + 1) + m_cap
    row = [ops.polygamma(k, w_top) for k in range(k_max)]
    rows = [None] * (m_cap + 1)
    rows[m_cap] = row
    facts = [(-1) ** (k + 1) * math.factorial(k) for k in range(k_max)]
    for m in range(m_cap - 1, -1, -1):
        w = ops.num(2 * a + 1) + m
        inv = 1 / w
        p = inv
        new = []
        for k in range(k_max):
            new.append(row[k] + facts[k] * p)
            p = p * inv
        row = new
        rows[m] = row
    return rows


def _log_gamma1p(k_max: int, ops):
    """Taylor coefficients of log G(1+u): 0, -gamma, zeta(2)/2, -zeta(3)/3, ..."""
    if ops.dps is None:
        return [0.0, -EULER_GAMMA] + [(-1) ** k * riemann_zeta(k) / k for k in range(2, k_max + 1)]
    return [mpmath.mpf(0), -mpmath.euler] + [(-1) ** k * mpmath.zeta(k) / k for k in range(2, k_max + 1)]


def _ell(lg1p, harm, psi_row, ops):
    """Coefficients of ell(u) at one pole (ell[0] = 0).

    (-1)^m m! u G(u-m) = G(1+u) / prod_{j<=m} (1 - u/j), so its logarithm has
    coefficients lg1p[k] + H_m^(k) / k with H_m^(k) = sum_{j<=m} j^-k; the
    G(a+1-s) factor adds (-1)^k psi^(k-1)(2a+1+m) / k!. Building ell from
    these sums avoids taking the logarithm of the Laurent series, which
    would cancel about exp(psi(m+1)) worth of digits.
    """
    ell = [0 * ops.one]
    for k in range(1, len(lg1p)):
        ell.append(lg1p[k] + harm[k] / k + (-1) ** k * psi_row[k - 1] / math.factorial(k))
    return ell


def _order_series(ell, orders, c, ops):
    """For each n: Taylor coefficients 0..n-1 of exp(n ell(u) + sum_k u^k / (k c^k)).

    The second term is the expansion of -log(1 - u/c); with c = a+1+m it
    carries the interior weight 1/(1-s), with c = a+m the exterior 1/s.
    Also returns the float bound obtained from |h|.
    """
    k_top = max(orders) - 1
    wlog = [0 * ops.one]
    cp = c
    for k in range(1, k_top + 1):
        wlog.append(1 / (k * cp))
        cp = cp * c
    T, Tabs = {}, {}
    for n in orders:
        h = [n * ell[k] + wlog[k] for k in range(n)] if n > 1 else [0 * ops.one]
        h[0] = 0 * ops.one
        T[n] = exp_series(h, n - 1, ops.fsum)
        Tabs[n] = exp_series([abs(float(v)) for v in h], n - 1)
    return T, Tabs


def _coef(spec: ProblemSpec, n_max: int):
    """(lam / (G(a) G(a+1)))^n for n = 1..n_max."""
    base = spec.lam / math.exp(math.lgamma(spec.a) + math.lgamma(spec.a + 1.0))
    return np.array([base**n for n in range(1, n_max + 1)], dtype=complex)


def _horner(beta, z):
    """sum_k beta[k] z^k for an array z (array kept on the left of products)."""
    acc = np.zeros_like(z) + beta[-1]
    for b in reversed(beta[:-1]):
        acc = acc * z + b
    return acc


@dataclass
class _Pieces:
    """Folded per-pole polynomial coefficients and float log-bounds (q-power excluded)."""

    beta_re: list
    beta_im: list
    log_mag: np.ndarray  # per x: log bound on |contribution|
    log_round: np.ndarray  # per x: same, weighted by the relative rounding growth of each term


def _fold(m, ell, log_unit, coefs, c, L_abs, ops):
    """beta_k = sum_n coef_n (-1)^(mn) e^(n log_unit) / c * T_n[n-1-k] / k!, k < n_top."""
    orders = sorted(coefs)
    T, Tabs = _order_series(ell, orders, c, ops)
    k_top = max(orders)
    beta_re = [0 * ops.one] * k_top
    beta_im = [0 * ops.one] * k_top
    lu_f = float(log_unit)
    c_f = float(c)
    log_terms, log_round = [], []
    for n in orders:
        cn = coefs[n]
        sgn = -1 if (m * n) % 2 else 1
        sc = ops.exp(n * log_unit) / c * sgn
        for k in range(n):
            t = sc * T[n][n - 1 - k] / math.factorial(k)
            if cn.real:
                beta_re[k] = beta_re[k] + t * cn.real
            if cn.imag:
                beta_im[k] = beta_im[k] + t * cn.imag
        poly = np.zeros_like(L_abs)
        for k in range(n - 1, -1, -1):
            poly = poly * L_abs + Tabs[n][n - 1 - k] / math.factorial(k)
        with np.errstate(divide="ignore"):
            mag = math.log(abs(cn)) + n * lu_f - math.log(c_f) + np.log(poly)
        # a term's relative error grows like eps (n + |exponent|), the exponent being
        # n log_unit + c log q
        log_terms.append(mag)
        log_round.append(mag + np.log(n + abs(n * lu_f) + c_f * L_abs))
    return _Pieces(beta_re, beta_im, np.logaddexp.reduce(np.array(log_terms), axis=0),
                   np.logaddexp.reduce(np.array(log_round), axis=0))


@dataclass
class _Sums:
    values: np.ndarray  # complex, per x
    const: complex  # exterior only: sum over poles of the x-independent part
    log_abs: np.ndarray  # per x: log of the summed rounding-weighted term bounds
    m_used: int
    last: float  # largest |term| bound among the final poles


def _exp_str(log_value: float) -> str:
    """exp(log_value) formatted without overflowing a float."""
    if log_value < 700.0:
        return f"{math.exp(log_value):.3g}"
    return f"1e{log_value / math.log(10.0):.1f}"


def _sweep(xs, spec: ProblemSpec, trunc: SeriesTruncation, coefs: dict, *, exterior: bool,
           constant: bool = True, time_budget: float | None = None) -> _Sums:
    """sum over poles m of the folded residues for x in (0, A] or [A, inf).

    ``constant=False`` drops the x-independent exterior part, whose pole sum
    does not converge, leaving the (convergent) x-dependent part.
    """
    t_start = time.monotonic()
    a = spec.a
    n_top = max(coefs)
    ops = _ops(trunc.dps)
    q = np.asarray(xs, dtype=float) / spec.A
    Lf = np.log(q)
    L_abs = np.abs(Lf)
    cap = trunc.m_max
    quiet_level = math.log(trunc.tol * 1e-3)
    if exterior and constant:
        m_peak = int(2.0 * a * n_top) + 1
    else:
        m_peak = int(2.0 * a * n_top / max(float(np.min(L_abs)), 1e-12)) + 1
    window = 50
    # recurrences in m below lose about log10(m) digits; mp mode carries guard digits
    work_dps = None if trunc.dps is None else trunc.dps + len(str(cap)) + 2
    with _with_dps(work_dps):
        k_max = max(n_top - 1, 1)
        psi = _polygamma_rows(a, cap, k_max, ops)
        lg1p = _log_gamma1p(k_max, ops)
        harm = [0 * ops.one] * (k_max + 1)
        L = ops.vlog(ops.vec(q))
        z = L if exterior else -L
        acc_re = ops.zeros(len(q))
        acc_im = ops.zeros(len(q))
        const_re = 0 * ops.one
        const_im = 0 * ops.one
        log_abs = np.full(len(q), -np.inf)
        w0 = ops.num(2 * a + 1)
        log_unit = ops.lgamma(w0)  # log(G(2a+1+m) / m!) at m = 0
        qpow = ops.vexp(L * (-a if exterior else a + 1))  # q^(a+1+m) or q^-(a+m)
        step = ops.vexp(-L if exterior else L)
        quiet = 0
        history = []
        for m in range(cap + 1):
            if m > 0 and ops.dps:
                # log(G(w0+m)/m!) and the q-power from their predecessors
                log_unit = log_unit + ops.log(w0 + m - 1) - ops.log(ops.num(m))
                qpow = qpow * step
            elif m > 0:
                log_unit = math.lgamma(w0 + m) - math.lgamma(m + 1.0)
                qpow = np.exp(Lf * (-(a + m) if exterior else (a + 1 + m)))
            c = ops.num(a) + m if exterior else ops.num(a + 1) + m
            if m > 0:
                inv = 1 / ops.num(m)
                p = inv
                for k in range(1, k_max + 1):
                    harm[k] = harm[k] + p
                    p = p * inv
            psi_row = psi[m]
            if ops.dps is None:
                # long running sums drift by ~ m eps in double; take the first-order pieces directly
                harm[1] = digamma(m + 1.0) + EULER_GAMMA
                psi_row = [digamma(2.0 * a + 1.0 + m)] + psi_row[1:]
            ell = _ell(lg1p, harm, psi_row, ops)
            pcs = _fold(m, ell, log_unit, coefs, c, L_abs, ops)
            poly_re = _horner(pcs.beta_re, z)
            poly_im = _horner(pcs.beta_im, z)
            acc_re = acc_re + qpow * poly_re
            acc_im = acc_im + qpow * poly_im
            qlog = (-(a + m) if exterior else (a + 1 + m)) * Lf
            term_log = pcs.log_mag + qlog
            round_log = pcs.log_round + qlog
            if exterior and constant:
                const_re = const_re - pcs.beta_re[0]
                const_im = const_im - pcs.beta_im[0]
                term_log = np.logaddexp(term_log, float(np.max(pcs.log_mag)))
                round_log = np.logaddexp(round_log, float(np.max(pcs.log_round)))
            log_abs = np.logaddexp(log_abs, round_log)
            last = float(np.max(term_log))
            history.append(last)
            quiet = quiet + 1 if last < quiet_level else 0
            if m >= m_peak and quiet >= 3:
                break
            if time_budget is not None and time.monotonic() - t_start > time_budget:
                raise NonConvergenceError(
                    f"residue sum exceeded its time budget of {time_budget:g} s at m={m} "
                    f"(last term bound {_exp_str(last)})"
                )
            if exterior and constant and m >= 4 * window and max(history[-window:]) >= max(history[-2 * window:-window]) - 0.7:
                raise SeriesDivergenceError(
                    f"exterior residue series is not converging: term bounds near m={m} are "
                    f"{_exp_str(max(history[-window:]))}, against "
                    f"{_exp_str(max(history[-2 * window:-window]))} {window} poles earlier"
                )
        else:
            where = "exterior" if exterior else "interior"
            raise SeriesDivergenceError(
                f"{where} residue sum not converged by m={cap} (last term bound {_exp_str(last)}); "
                "raise m_max or move x away from A"
            )
        values = ops.to_float(acc_re) + 1j * ops.to_float(acc_im)
        const = complex(float(const_re), float(const_im))
    return _Sums(values=values, const=const, log_abs=log_abs, m_used=m, last=math.exp(last))


def _rounding(sums: _Sums, ops_eps: float) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 4.0 * ops_eps * np.exp(sums.log_abs)


def _eps(trunc: SeriesTruncation) -> float:
    return EPS if trunc.dps is None else 10.0 ** (1 - trunc.dps)


def cancellation_digits(spec: ProblemSpec, n_max: int, q: float, *, samples: int = 80) -> float:
    """log10 of the largest residue-term bound over n <= n_max and all poles at x = q A.

    The interior partial sums are O(1), so this is roughly the number of
    decimal digits the m-summation cancels.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    a = spec.a
    L = math.log(q)
    m_hi = int(4.0 * a * n_max / -L) + 50
    ms = np.unique(np.linspace(0, m_hi, samples).astype(int))
    k_max = max(n_max - 1, 1)
    coefs = dict(zip(range(1, n_max + 1), _coef(spec, n_max)))
    ops = _FloatOps()
    best = -np.inf
    for m in ms:
        m = int(m)
        w = 2.0 * a + 1.0 + m
        psi_row = [polygamma(k, w) for k in range(k_max)]
        harm = [0.0, digamma(m + 1.0) + EULER_GAMMA] + [
            riemann_zeta(k) - hurwitz_zeta(float(k), m + 1.0) for k in range(2, k_max + 1)
        ]
        ell = _ell(_log_gamma1p(k_max, ops), harm, psi_row, ops)
        lu = math.lgamma(w) - math.lgamma(m + 1.0)
        c = a + 1.0 + m
        _, Tabs = _order_series(ell, list(coefs), c, ops)
        for n, cn in coefs.items():
            size = math.fsum(Tabs[n][n - 1 - k] * abs(L) ** k / math.factorial(k) for k in range(n))
            best = max(best, math.log(abs(cn)) + n * lu - math.log(c) + math.log(size) + c * L)
    return best / math.log(10.0)


def choose_dps(spec: ProblemSpec, n_max: int, q_worst: float, tol: float) -> int | None:
    """None (double precision) when cancellation leaves tol intact, else an mpmath precision."""
    lost = max(cancellation_digits(spec, n_max, q_worst), 0.0)
    need = -math.log10(tol) + 2.0
    if lost + need <= 14.0:
        return None
    return int(math.ceil(lost + need)) + 5


def neumann_residue_sum(n: int, x, spec: ProblemSpec, trunc: SeriesTruncation, table: LaurentTable | None = None,
                        *, time_budget: float | None = None):
    """sum_m Res_{s=-a-m} [G(a+s) G(a+1-s)]^n (x/A)^(1-s)/(1-s) for 0 < x <= A.

    Returns (values, rounding_error_estimate).
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= 0) or np.any(xs > spec.A):
        raise ValueError("neumann_residue_sum needs 0 < x <= A")
    sums = _sweep(xs, spec, trunc, {n: 1.0 + 0j}, exterior=False, time_budget=time_budget)
    return sums.values.real, _rounding(sums, _eps(trunc))


def exterior_residue_sum(n: int, x, spec: ProblemSpec, trunc: SeriesTruncation,
                         table: LaurentTable | None = None, *, constant: bool = True):
    """Order-n sum over poles of the exterior integrand residues for x >= A.

    The integrand is [G(a+s) G(a+1-s)]^n (1 - (x/A)^s) / s; returns
    (constant part, x-dependent part). With ``constant=False`` only the
    x-dependent part is summed and None stands in for the constant.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < spec.A):
        raise ValueError("exterior_residue_sum needs x >= A")
    sums = _sweep(xs, spec, trunc, {n: 1.0 + 0j}, exterior=True, constant=constant)
    return (sums.const.real if constant else None), sums.values.real


@dataclass
class SeriesResult:
    """Residue-series values on a grid with diagnostics."""

    values: np.ndarray
    est_error: np.ndarray
    n_max: int
    m_used: int
    rounding: np.ndarray
    dps: int | None = None


def _n_tail_bound(spec: ProblemSpec, trunc: SeriesTruncation) -> float:
    """Bound on the orders beyond n_max, from |order-n integral| <= rho^n C at sigma = 1/2."""
    t = np.linspace(-60.0, 60.0, 6001)
    s = 0.5 + 1j * t
    bs = np.abs(np.exp(log_gamma(spec.a + s) + log_gamma(spec.a + 1.0 - s)))
    b_half = math.exp(2.0 * math.lgamma(spec.a + 0.5))
    integral = np.trapezoid(bs / b_half / np.abs(1.0 - s), t) / (2.0 * math.pi)
    return float(integral * trunc.n_tail)


def f_interior_series(x, spec: ProblemSpec, fA: complex, trunc: SeriesTruncation,
                      table: LaurentTable | None = None, *, full_output=False,
                      time_budget: float | None = None):
    """1 - fA sum_n (lam / (G(a) G(a+1)))^n sum_m Res_{s=-a-m}[...] on 0 <= x <= A."""
    xs_in = np.asarray(x, dtype=float)
    xs = np.atleast_1d(xs_in)
    if np.any(xs < 0) or np.any(xs > spec.A):
        raise ValueError("interior series needs 0 <= x <= A")
    values = np.ones(len(xs), dtype=complex)
    errs = np.zeros(len(xs))
    rounding = np.zeros(len(xs))
    pos = xs > 0
    m_used = 0
    if np.any(pos):
        coefs = dict(zip(range(1, trunc.n_max + 1), _coef(spec, trunc.n_max)))
        sums = _sweep(xs[pos], spec, trunc, coefs, exterior=False, time_budget=time_budget)
        m_used = sums.m_used
        values[pos] = 1.0 - fA * sums.values
        rounding[pos] = abs(fA) * _rounding(sums, _eps(trunc))
        q = xs[pos] / spec.A
        m_tail = sums.last * q / np.maximum(1.0 - q, 1e-3)
        n_tail = _n_tail_bound(spec, trunc) * np.sqrt(q)
        errs[pos] = rounding[pos] + abs(fA) * (m_tail + n_tail)
    if full_output:
        return SeriesResult(values=values, est_error=errs, n_max=trunc.n_max, m_used=m_used,
                            rounding=rounding, dps=trunc.dps)
    return values[0] if xs_in.ndim == 0 else values


def exterior_constant_sum(spec: ProblemSpec, trunc: SeriesTruncation, table: LaurentTable | None = None,
                          *, time_budget: float | None = None):
    """S with fA (1 - S) the limit of the exterior series as x -> infinity.

    The pole sum behind S behaves like sum (-1)^(mn) m^(2an-1), so unless its
    terms die out :class:`SeriesDivergenceError` is raised.
    """
    coefs = dict(zip(range(1, trunc.n_max + 1), _coef(spec, trunc.n_max)))
    sums = _sweep(np.array([spec.A]), spec, trunc, coefs, exterior=True, time_budget=time_budget)
    return -sums.const


def f_exterior_series(x, spec: ProblemSpec, fA: complex, trunc: SeriesTruncation,
                      table: LaurentTable | None = None, *, full_output=False,
                      time_budget: float | None = None):
    """1 + fA sum_n (lam / (G(a) G(a+1)))^n sum_m Res[... -(x/A)^s / s] for x >= A.

    Pass a truncation from :func:`exterior_truncation`.

    The x-independent part of the exterior expansion diverges (see
    :func:`exterior_constant_sum`). Requiring f -> 1 as x -> infinity fixes it
    to 1/fA - 1, which leaves only the convergent x-dependent pole sum.
    """
    xs_in = np.asarray(x, dtype=float)
    xs = np.atleast_1d(xs_in)
    if np.any(xs < spec.A):
        raise ValueError("exterior series needs x >= A")
    coefs = dict(zip(range(1, trunc.n_max + 1), _coef(spec, trunc.n_max)))
    sums = _sweep(xs, spec, trunc, coefs, exterior=True, constant=False, time_budget=time_budget)
    values = 1.0 + fA * sums.values
    rnd = abs(fA) * _rounding(sums, _eps(trunc))
    # orders past n_max: the last order times the geometric tail of |lam|^n
    top = trunc.n_max
    last = _sweep(xs, spec, trunc, {top: coefs[top]}, exterior=True, constant=False, time_budget=time_budget)
    ratio = abs(spec.lam)
    n_tail = np.abs(last.values) * ratio / (1.0 - ratio)
    errs = rnd + abs(fA) * (sums.last + n_tail)
    if full_output:
        return SeriesResult(values=values, est_error=errs, n_max=trunc.n_max, m_used=sums.m_used,
                            rounding=rnd, dps=trunc.dps)
    return values[0] if xs_in.ndim == 0 else values
