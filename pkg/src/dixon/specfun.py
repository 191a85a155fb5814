"""Gamma-family special functions in double precision.

Complex log-gamma (Stirling series after upward recurrence), beta,
Hurwitz zeta / polygamma (Euler-Maclaurin), Bernoulli numbers, derivatives
of Gamma and 1/Gamma, and the Laurent coefficients of Gamma at its poles.

Functions that feed the residue series also accept ``dps``: when given, the
computation is carried out in mpmath at that many decimal digits and mpf
values are returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243
LOG_SQRT_2PI = 0.91893853320467274178032973640561764

_STIRLING_MIN_RE = 15.0
_STIRLING_TERMS = 12


class PoleError(ValueError):
    """Argument sits on a pole of Gamma."""


# ---------------------------------------------------------------------------
# Bernoulli numbers
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _bernoulli_exact(n: int) -> Fraction:
    if n == 0:
        return Fraction(1)
    # sum_{j<=n} C(n+1, j) B_j = 0
    acc = Fraction(0)
    for j in range(n):
        acc += math.comb(n + 1, j) * _bernoulli_exact(j)
    return -acc / (n + 1)


def bernoulli(n: int) -> float:
    """B_n with the B_1 = -1/2 convention."""
    if n < 0:
        raise ValueError(f"bernoulli index must be nonnegative, got {n}")
    if n > 60:
        raise OverflowError(f"bernoulli({n}) is outside the supported range n <= 60")
    return float(_bernoulli_exact(n))


_STIRLING_COEFFS = np.array(
    [float(_bernoulli_exact(2 * j) / (2 * j * (2 * j - 1))) for j in range(1, _STIRLING_TERMS + 1)]
)


# ---------------------------------------------------------------------------
# log-gamma and beta
# ---------------------------------------------------------------------------

def _check_poles(z: np.ndarray) -> None:
    bad = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(bad):
        raise PoleError(f"Gamma has a pole at {z[bad][0].real:g}")


def log_gamma(s):
    """Log-gamma for complex arguments, branch cut along the negative real axis.

    Arguments with small real part are shifted upward by the recurrence
    log G(s) = log G(s + N) - sum_k log(s + k) until the Stirling series is
    accurate. Accepts scalars or arrays.
    """
    z = np.asarray(s, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    _check_poles(z)

    shift = np.zeros_like(z)
    low = z.real < _STIRLING_MIN_RE
    while np.any(low):
        shift[low] += np.log(z[low])
        z[low] += 1.0
        low = z.real < _STIRLING_MIN_RE

    zinv = 1.0 / z
    zinv2 = zinv * zinv
    series = np.zeros_like(z)
    for c in _STIRLING_COEFFS[::-1]:
        series = series * zinv2 + c
    out = (z - 0.5) * np.log(z) - z + LOG_SQRT_2PI + series * zinv - shift
    return out[0] if scalar else out


def gamma(x):
    """Gamma for real or complex input via exp(log_gamma)."""
    val = np.exp(log_gamma(x))
    if np.isrealobj(x):
        return val.real
    return val


def beta(p, q):
    """Euler beta function B(p, q) = G(p) G(q) / G(p + q)."""
    val = np.exp(log_gamma(p) + log_gamma(q) - log_gamma(np.add(p, q)))
    if np.isrealobj(p) and np.isrealobj(q):
        return val.real
    return val


# ---------------------------------------------------------------------------
# Hurwitz zeta and polygamma
# ---------------------------------------------------------------------------

def hurwitz_zeta(s: float, x: float) -> float:
    """zeta(s, x) = sum_k (x + k)^-s for real s > 1, x > 0 (Euler-Maclaurin)."""
    if s <= 1:
        raise ValueError("hurwitz_zeta needs s > 1")
    if x <= 0:
        raise ValueError("hurwitz_zeta needs x > 0")
    cut = max(20.0, s + 10.0)
    n_direct = max(0, int(math.ceil(cut - x)))
    head = math.fsum((x + k) ** (-s) for k in range(n_direct))
    X = x + n_direct
    tail = [X ** (1.0 - s) / (s - 1.0), 0.5 * X ** (-s)]
    # B_{2j}/(2j)! * s(s+1)...(s+2j-2) * X^{-s-2j+1}
    rising = s
    power = X ** (-s - 1.0)
    fact = 2.0
    for j in range(1, 30):
        term = float(_bernoulli_exact(2 * j)) / fact * rising * power
        tail.append(term)
        if abs(term) < 1e-18 * abs(tail[0]):
            break
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        power /= X * X
        fact *= (2 * j + 1) * (2 * j + 2)
    return head + math.fsum(tail)


def riemann_zeta(k: int) -> float:
    """zeta(k) for integer k >= 2."""
    return hurwitz_zeta(float(k), 1.0)


def digamma(x: float) -> float:
    if x <= 0:
        raise ValueError("digamma is only provided for x > 0")
    acc = 0.0
    while x < 15.0:
        acc -= 1.0 / x
        x += 1.0
    x2 = 1.0 / (x * x)
    series = 0.0
    for j in range(_STIRLING_TERMS, 0, -1):
        series = series * x2 + float(_bernoulli_exact(2 * j)) / (2 * j)
    return acc + math.log(x) - 0.5 / x - series * x2


def polygamma(n: int, x: float) -> float:
    """psi^(n)(x); n = 0 is the digamma function.

    For n >= 1 uses psi^(n)(x) = (-1)^(n+1) n! zeta(n+1, x).
    """
    if x <= 0:
        raise ValueError(f"polygamma needs x > 0, got {x}")
    if n < 0:
        raise ValueError("polygamma order must be nonnegative")
    if n == 0:
        return digamma(x)
    sign = 1.0 if n % 2 == 1 else -1.0
    return sign * math.factorial(n) * hurwitz_zeta(n + 1.0, x)


# ---------------------------------------------------------------------------
# Derivatives of Gamma and 1/Gamma
# ---------------------------------------------------------------------------

def gamma_derivs(x, nu_max: int, *, scaled: bool = False, dps: int | None = None):
    """[G(x), G'(x), ..., G^(nu_max)(x)] for x > 0.

    Uses G^(v+1) = sum_j C(v, j) G^(j) psi^(v-j). With ``scaled=True`` every
    entry is divided by G(x), which keeps large x free of overflow.
    """
    if dps is not None:
        with mpmath.workdps(dps):
            x = mpmath.mpf(x)
            psi = [mpmath.polygamma(k, x) for k in range(nu_max)]
            out = [mpmath.mpf(1) if scaled else mpmath.gamma(x)]
            for v in range(nu_max):
                out.append(mpmath.fsum(math.comb(v, j) * out[j] * psi[v - j] for j in range(v + 1)))
            return out
    if x <= 0:
        raise ValueError(f"gamma_derivs needs x > 0, got {x}")
    psi = [polygamma(k, x) for k in range(nu_max)]
    out = [1.0 if scaled else float(gamma(float(x)))]
    for v in range(nu_max):
        out.append(math.fsum(math.comb(v, j) * out[j] * psi[v - j] for j in range(v + 1)))
    return out


@dataclass(frozen=True)
class RecipGammaDerivs:
    """Derivatives d[v] of 1/Gamma(w) at w = m + 1."""

    m: int
    d: tuple


def _reciprocal_series(coeffs):
    inv0 = 1.0 / coeffs[0]
    out = [inv0]
    for k in range(1, len(coeffs)):
        out.append(-inv0 * math.fsum(coeffs[j] * out[k - j] for j in range(1, k + 1)))
    return out


def recip_gamma_derivs(m: int, nu_max: int) -> RecipGammaDerivs:
    if m < 0:
        raise ValueError("m must be nonnegative")
    g = gamma_derivs(m + 1.0, nu_max)
    taylor = [g[j] / math.factorial(j) for j in range(nu_max + 1)]
    recip = _reciprocal_series(taylor)
    return RecipGammaDerivs(m=m, d=tuple(math.factorial(v) * recip[v] for v in range(nu_max + 1)))


# ---------------------------------------------------------------------------
# Laurent coefficients of Gamma at z = -m
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaurentTable:
    """Coefficients c[k, m] with G(z) = (-1)^m/(z+m) * sum_k c[k, m] (z+m)^k.

    ``scaled[k, m] = m! * c[k, m]`` is kept alongside because c itself
    underflows double precision for m beyond ~170. ``dps`` is None for a
    float table, otherwise the mpmath precision the entries were built at
    (arrays then hold mpf objects).
    """

    m_max: int
    k_max: int
    c: np.ndarray
    scaled: np.ndarray
    dps: int | None = None

    def column(self, m: int, k_max: int | None = None, *, scaled: bool = True):
        if m > self.m_max:
            raise IndexError(f"Laurent table built to m_max={self.m_max}, asked for m={m}")
        k_max = self.k_max if k_max is None else k_max
        if k_max > self.k_max:
            raise IndexError(f"Laurent table built to k_max={self.k_max}, asked for k={k_max}")
        src = self.scaled if scaled else self.c
        return list(src[: k_max + 1, m])


def _gamma_one_plus_u_taylor(k_max: int, dps: int | None):
    """Taylor coefficients of Gamma(1 + u) from exp(-gamma u + sum (-1)^k zeta(k) u^k / k)."""
    if dps is None:
        logc = [0.0, -EULER_GAMMA] + [(-1) ** k * riemann_zeta(k) / k for k in range(2, k_max + 1)]
        fsum = math.fsum
        one = 1.0
    else:
        logc = [mpmath.mpf(0), -mpmath.euler] + [(-1) ** k * mpmath.zeta(k) / k for k in range(2, k_max + 1)]
        fsum = mpmath.fsum
        one = mpmath.mpf(1)
    out = [one]
    for k in range(1, k_max + 1):
        out.append(fsum(j * logc[j] * out[k - j] for j in range(1, k + 1)) / k)
    return out


def laurent_coeffs(m_max: int, k_max: int, *, dps: int | None = None) -> LaurentTable:
    """Laurent coefficients of Gamma at its poles, via the functional equation.

    With u = z + m:  sum_k c[k, m] u^k = Gamma(1+u) / (m! prod_{j<=m} (1 - u/j)).
    Dividing by (1 - u/j) is the recurrence new[k] = old[k] + new[k-1]/j.
    """
    if m_max < 0 or k_max < 0:
        raise ValueError("m_max and k_max must be nonnegative")
    ctx = mpmath.workdps(dps) if dps is not None else None
    if ctx is not None:
        ctx.__enter__()
    try:
        base = _gamma_one_plus_u_taylor(k_max, dps)
        dtype = object if dps is not None else float
        scaled = np.empty((k_max + 1, m_max + 1), dtype=dtype)
        c = np.empty_like(scaled)
        col = list(base)
        for m in range(m_max + 1):
            if m > 0:
                inv = 1.0 / m if dps is None else mpmath.mpf(1) / m
                for k in range(1, k_max + 1):
                    col[k] = col[k] + col[k - 1] * inv
            scaled[:, m] = col
            if dps is None:
                c[:, m] = np.array(col) * math.exp(-math.lgamma(m + 1.0))
            else:
                fm = mpmath.factorial(m)
                c[:, m] = [v / fm for v in col]
    finally:
        if ctx is not None:
            ctx.__exit__(None, None, None)
    return LaurentTable(m_max=m_max, k_max=k_max, c=c, scaled=scaled, dps=dps)


def laurent_coeffs_bernoulli(m_max: int, k_max: int) -> np.ndarray:
    """Same coefficients from the Bernoulli-number form with d_{v,m} = (1/Gamma)^(v)(m+1).

    Terms with k - v odd carry (2^(k-v) - 2) B_(k-v) = 0, so only even k - v
    contribute and the sign exponent (v + k)/2 - 1 is an integer. Kept as an
    independent cross-check of :func:`laurent_coeffs`.
    """
    out = np.zeros((k_max + 1, m_max + 1))
    for m in range(m_max + 1):
        d = recip_gamma_derivs(m, k_max).d
        for k in range(k_max + 1):
            terms = []
            for v in range(k + 1):
                mu = k - v
                if mu % 2:
                    continue
                sign = -1.0 if ((v + k) // 2 - 1) % 2 else 1.0
                terms.append(
                    sign * (2.0**mu - 2.0) * bernoulli(mu) * math.pi**mu
                    / (math.factorial(v) * math.factorial(mu)) * d[v]
                )
            out[k, m] = math.fsum(terms)
    return out
