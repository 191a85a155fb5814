"""Problem definition, kernels, admissibility and the equation residual.

The equation solved throughout the package is

    f(x) = 1 + lam * x^(a+1) / B(a, a+1) * int_0^A y^(a-1) (x+y)^(-1-2a) f(y) dy,

the integrated form of f = 1 + lam * int_0^A dP(y/x)/dy f(y) dy with P the
regularized incomplete beta integral of t^(a-1) (1+t)^(-1-2a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi

from .specfun import beta


class DixonError(Exception):
    """Base class for solver errors."""


class AdmissibilityError(DixonError):
    """|lam| is not below the bound B(a, a+1) / B(a+sigma, a+1-sigma)."""

    def __init__(self, message: str, *, bound: float, sigma: float):
        super().__init__(message)
        self.bound = bound
        self.sigma = sigma


class NonConvergenceError(DixonError):
    """A quadrature or series failed to reach its tolerance."""


@dataclass(frozen=True)
class ProblemSpec:
    """Parameters (a, A, lam) of one equation instance.

    ``b0`` caches B(a, a+1) and is computed on construction.
    """

    a: float
    A: float
    lam: complex
    b0: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a, A = float(self.a), float(self.A)
        lam = complex(self.lam)
        if not (a > 0 and math.isfinite(a)):
            raise ValueError(f"a must be a positive real, got {self.a}")
        if not (A >= 1 and math.isfinite(A)):
            raise ValueError(f"A must satisfy A >= 1, got {self.A}")
        if lam == 0 or not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
            raise ValueError("lam must be a finite nonzero complex number")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "b0", float(beta(a, a + 1.0)))

    @property
    def is_real(self) -> bool:
        return self.lam.imag == 0.0

    @property
    def rho(self) -> float:
        """Neumann ratio at the slackest abscissa sigma = 1/2."""
        return abs(self.lam) * float(beta(self.a + 0.5, self.a + 0.5)) / self.b0

    def as_dict(self) -> dict:
        return {"a": self.a, "A": self.A, "lambda_re": self.lam.real, "lambda_im": self.lam.imag}


METHODS = ("nystrom", "picard", "mellin", "series")


@dataclass
class MethodResult:
    """Values of f on a grid produced by one method."""

    xs: np.ndarray
    values: np.ndarray
    method: str
    est_error: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        self.est_error = np.asarray(self.est_error, dtype=float)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.xs.ndim != 1 or len(self.values) != len(self.xs) or len(self.est_error) != len(self.xs):
            raise ValueError("xs, values and est_error must be 1-D and equally long")
        if np.any(np.diff(self.xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        if np.any(self.est_error < 0):
            raise ValueError("error estimates must be nonnegative")

    def reality_violations(self) -> np.ndarray:
        """Indices where |Im f| exceeds 10x the error estimate."""
        return np.nonzero(np.abs(self.values.imag) > 10.0 * self.est_error)[0]


def kernel_h(x, a: float):
    """x^a / (1+x)^(1+2a); its Mellin transform is B(a+s, a+1-s)."""
    if a <= 0:
        raise ValueError("a must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("kernel_h is defined for x >= 0")
    out = x**a / (1.0 + x) ** (1.0 + 2.0 * a)
    return out[()] if out.ndim == 0 else out


def fredholm_kernel(x, y, spec: ProblemSpec):
    """Multiplier of f(y) under the integral: lam x^(a+1) y^(a-1) / (B0 (x+y)^(1+2a))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("fredholm_kernel needs x > 0 and y > 0")
    a = spec.a
    out = np.asarray(spec.lam * x ** (a + 1.0) * y ** (a - 1.0) / (spec.b0 * (x + y) ** (1.0 + 2.0 * a)))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    margin: float
    bound: float
    sigma: float


@lru_cache(maxsize=256)
def admissible(spec: ProblemSpec, sigma: float) -> Admissibility:
    """Check |lam| < B(a, a+1) / B(a+sigma, a+1-sigma).

    The denominator is smallest at sigma = 1/2, so that abscissa gives the
    loosest bound; every other sigma in (-a, a+1) is checked on its own.
    """
    a = spec.a
    if not (-a < sigma < a + 1.0):
        raise ValueError(f"sigma={sigma} outside (-a, a+1) = ({-a}, {a + 1})")
    bound = spec.b0 / float(beta(a + sigma, a + 1.0 - sigma))
    margin = bound - abs(spec.lam)
    return Admissibility(ok=margin > 0, margin=margin, bound=bound, sigma=sigma)


def require_admissible(spec: ProblemSpec, sigma: float) -> Admissibility:
    adm = admissible(spec, sigma)
    if not adm.ok:
        raise AdmissibilityError(
            f"|lambda|={abs(spec.lam):.10g} violates the bound {adm.bound:.10g} at sigma={sigma:g}",
            bound=adm.bound,
            sigma=sigma,
        )
    return adm


@lru_cache(maxsize=64)
def jacobi_rule(n: int, a: float, A: float):
    """Nodes/weights on [0, A] for int_0^A y^(a-1) g(y) dy."""
    t, w = roots_jacobi(n, 0.0, a - 1.0)
    y = 0.5 * A * (t + 1.0)
    return y, w * (0.5 * A) ** a


def apply_operator(xs, nodes, weights, fvals, spec: ProblemSpec) -> np.ndarray:
    """lam x^(a+1)/B0 * sum_j w_j (x+y_j)^(-1-2a) f_j for every x; zero at x = 0."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    a = spec.a
    out = np.zeros(xs.shape, dtype=complex)
    pos = xs > 0
    if np.any(pos):
        xp = xs[pos][:, None]
        mat = weights[None, :] / (xp + nodes[None, :]) ** (1.0 + 2.0 * a)
        out[pos] = spec.lam / spec.b0 * xs[pos] ** (a + 1.0) * (mat @ fvals)
    return out


def residual_supnorm(
    f_eval: Callable[[np.ndarray], np.ndarray],
    spec: ProblemSpec,
    n_quad: int,
    n_check: int,
) -> float:
    """max_x |f(x) - 1 - (integral term)| over n_check uniform points in (0, A].

    ``f_eval`` receives a 1-D array of abscissas and returns the matching
    array of f values (wrap scalar functions with ``np.vectorize``). The
    integral uses an n_quad-node Gauss-Jacobi rule with weight y^(a-1).
    """
    if n_quad < 8 or n_check < 8:
        raise ValueError("n_quad and n_check must be at least 8")
    nodes, weights = jacobi_rule(n_quad, spec.a, spec.A)
    xs = spec.A * np.arange(1, n_check + 1) / n_check
    f_nodes = np.asarray(f_eval(nodes), dtype=complex)
    f_x = np.asarray(f_eval(xs), dtype=complex)
    res = f_x - 1.0 - apply_operator(xs, nodes, weights, f_nodes, spec)
    return float(np.max(np.abs(res)))
