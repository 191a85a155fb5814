"""Solvers for the generalized Dixon integral equation

    f(x) = 1 + lam x^(a+1) / B(a, a+1) int_0^A y^(a-1) (x+y)^(-1-2a) f(y) dy

by Nystrom discretization, Mellin-Barnes contour quadrature and a residue
(Neumann) double series.
"""

from .core import (
    AdmissibilityError,
    DixonError,
    MethodResult,
    NonConvergenceError,
    ProblemSpec,
    admissible,
    fredholm_kernel,
    kernel_h,
    residual_supnorm,
)
from .fredholm_oracle import NystromGrid, nystrom_eval, nystrom_solve, picard_solve
from .mellin_quadrature import ContourSettings, f_at_A, f_exterior_mb, f_interior_mb
from .residue_series import (
    SeriesDivergenceError,
    SeriesTruncation,
    auto_truncation,
    exterior_truncation,
    f_exterior_series,
    f_interior_series,
)
from .specfun import LaurentTable, laurent_coeffs

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ContourSettings",
    "DixonError",
    "LaurentTable",
    "MethodResult",
    "NonConvergenceError",
    "NystromGrid",
    "ProblemSpec",
    "SeriesDivergenceError",
    "SeriesTruncation",
    "admissible",
    "auto_truncation",
    "exterior_truncation",
    "f_at_A",
    "f_exterior_mb",
    "f_exterior_series",
    "f_interior_mb",
    "f_interior_series",
    "fredholm_kernel",
    "kernel_h",
    "laurent_coeffs",
    "nystrom_eval",
    "nystrom_solve",
    "picard_solve",
    "residual_supnorm",
]
