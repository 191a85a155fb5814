import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dixon.core import ProblemSpec
from dixon.mellin_quadrature import ContourSettings, f_at_A, f_exterior_mb, f_interior_mb, gamma_power_mb
from dixon.residue_series import (
    SeriesDivergenceError,
    SeriesTruncation,
    auto_truncation,
    build_table,
    choose_dps,
    choose_m_max,
    choose_n_max,
    exterior_constant_sum,
    exterior_residue_sum,
    exterior_truncation,
    f_exterior_series,
    f_interior_series,
    gamma_power_derivative,
    neumann_residue_sum,
    pole_power_limit,
    residue_interior,
    residue_interior_printed,
)
from dixon.specfun import EULER_GAMMA, laurent_coeffs

TIGHT = ContourSettings(0.5, abs_tol=1e-13)


@pytest.fixture(scope="module")
def table():
    return laurent_coeffs(8, 6)


def cauchy_residue(f, pole, n_terms_radius=0.4):
    """(1/2 pi i) of the circle integral of f around pole, in mpmath."""
    mpmath.mp.dps = 30
    r = n_terms_radius

    def g(th):
        u = r * mpmath.expj(th)
        return f(pole + u) * u

    val = mpmath.quad(g, [0, mpmath.pi / 2, mpmath.pi, 3 * mpmath.pi / 2, 2 * mpmath.pi]) / (2 * mpmath.pi)
    mpmath.mp.dps = 15
    return val


class TestPolePowerLimit:
    def test_digamma_example(self, table):
        assert pole_power_limit(2, 1, 0, table) == pytest.approx(-2 * EULER_GAMMA, rel=1e-13)

    @pytest.mark.parametrize("m", [0, 1, 4])
    def test_n1_r0_is_gamma_residue(self, table, m):
        assert pole_power_limit(1, 0, m, table) == pytest.approx((-1) ** m / math.factorial(m), rel=1e-14)

    @pytest.mark.parametrize("n,r,m", [(2, 2, 1), (3, 3, 0), (4, 2, 3), (3, 4, 2)])
    def test_against_cauchy_derivative(self, table, n, r, m):
        mpmath.mp.dps = 30
        g = lambda u: (u * mpmath.gamma(u - m)) ** n  # noqa: E731
        want = cauchy_residue(lambda u: g(u) / u ** (r + 1), 0) * math.factorial(r)
        mpmath.mp.dps = 15
        assert pole_power_limit(n, r, m, table) == pytest.approx(float(want.real), rel=1e-11)

    def test_scaled(self, table):
        m, n = 3, 2
        raw = pole_power_limit(n, 1, m, table)
        assert pole_power_limit(n, 1, m, table, scaled=True) == pytest.approx(
            raw * ((-1) ** m * math.factorial(m)) ** n, rel=1e-13)


class TestGammaPowerDerivative:
    def test_example(self):
        assert gamma_power_derivative(1, 1, 0, 0.5) == pytest.approx(-(1 - EULER_GAMMA), rel=1e-13)

    @pytest.mark.parametrize("n,nu,m,a", [(2, 1, 0, 0.5), (3, 2, 1, 1.0), (2, 3, 2, 0.7)])
    def test_against_mpmath_diff(self, n, nu, m, a):
        mpmath.mp.dps = 30
        want = mpmath.diff(lambda s: mpmath.gamma(a + 1 - s) ** n, -a - m, nu)
        mpmath.mp.dps = 15
        assert gamma_power_derivative(n, nu, m, a) == pytest.approx(float(want), rel=1e-10)


class TestResidue:
    @pytest.mark.parametrize("m", [0, 1, 5])
    def test_n1_closed_form(self, table, m):
        a, x = 0.5, 0.4
        spec = ProblemSpec(a, 1.0, 0.5)
        want = (-1) ** m / math.factorial(m) * math.gamma(2 * a + 1 + m) * x ** (a + 1 + m) / (a + 1 + m)
        assert residue_interior(1, m, x, spec, table) == pytest.approx(want, rel=1e-13)

    @pytest.mark.parametrize("n,m", [(2, 0), (2, 3), (3, 1), (4, 2)])
    def test_against_cauchy(self, table, n, m):
        a, x = 0.7, 0.6
        spec = ProblemSpec(a, 1.0, 0.3)
        f = lambda s: (mpmath.gamma(a + s) * mpmath.gamma(a + 1 - s)) ** n * x ** (1 - s) / (1 - s)  # noqa: E731
        want = cauchy_residue(f, -a - m)
        assert residue_interior(n, m, x, spec, table) == pytest.approx(float(want.real), rel=1e-10)

    def test_printed_form_agrees_at_first_order(self, table):
        spec = ProblemSpec(0.5, 1.0, 0.5)
        for m in (0, 2):
            assert residue_interior_printed(1, m, 0.5, spec, table) == pytest.approx(
                residue_interior(1, m, 0.5, spec, table), rel=1e-12)

    def test_printed_form_misses_chain_rule_sign(self, table):
        spec = ProblemSpec(0.5, 1.0, 0.5)
        good = residue_interior(2, 1, 0.5, spec, table)
        printed = residue_interior_printed(2, 1, 0.5, spec, table)
        assert abs(float(printed) - good) > 1e-3 * abs(good)

    def test_zero_x(self, table):
        assert residue_interior(2, 0, 0.0, ProblemSpec(0.5, 1.0, 0.5), table) == 0.0


class TestPerOrderSums:
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_interior_matches_quadrature(self, n):
        spec = ProblemSpec(0.5, 1.0, 0.5)
        trunc = auto_truncation(spec, 1e-9, 0.7, dps=None)
        xs = np.array([0.05, 0.3, 0.7])
        got, rnd = neumann_residue_sum(n, xs, spec, trunc)
        want, _ = gamma_power_mb(n, xs, spec.a, spec.A, TIGHT)
        # double precision: allowed the engine's own rounding estimate on top
        assert np.all(np.abs(got - want.real) <= 1e-11 + rnd)

    def test_engine_matches_one_residue_at_a_time(self):
        spec = ProblemSpec(1.0, 1.0, 0.3)
        trunc = SeriesTruncation(n_max=3, m_max=400, tol=1e-12, rho=spec.rho, dps=40)
        table = build_table(trunc, 400)
        for n in (2, 3):
            total = math.fsum(residue_interior(n, m, 0.4, spec, table) for m in range(400))
            got, _ = neumann_residue_sum(n, 0.4, spec, trunc)
            assert got[0] == pytest.approx(total, rel=1e-11)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_exterior_x_part_differences(self, n):
        # the x-independent part diverges, so compare differences in x only
        spec = ProblemSpec(0.5, 1.0, 0.5)
        trunc = auto_truncation(spec, 1e-9, 0.7, dps=None)
        _, xv = exterior_residue_sum(n, np.array([2.0, 5.0]), spec, trunc, constant=False)
        g, _ = gamma_power_mb(n, np.array([2.0, 5.0]), spec.a, spec.A, ContourSettings(1.2, abs_tol=1e-13),
                              exterior=True)
        assert xv[0] - xv[1] == pytest.approx((g[0] - g[1]).real, abs=1e-10)

    def test_domain(self):
        spec = ProblemSpec(0.5, 1.0, 0.5)
        trunc = auto_truncation(spec, 1e-6, dps=None)
        with pytest.raises(ValueError):
            neumann_residue_sum(1, 1.5, spec, trunc)
        with pytest.raises(ValueError):
            exterior_residue_sum(1, 0.5, spec, trunc)


class TestFullSeries:
    def test_matches_contour_solution(self):
        spec = ProblemSpec(0.5, 1.0, 0.5)
        fa = f_at_A(spec, strict=False)
        xs = np.array([0.0, 0.1, 0.5, 0.8])
        trunc = auto_truncation(spec, 1e-8, 0.8)
        res = f_interior_series(xs, spec, fa, trunc, full_output=True)
        want = f_interior_mb(xs, spec, fa, ContourSettings(0.5, abs_tol=1e-12))
        assert res.values[0] == 1.0
        assert np.max(np.abs(res.values - want)) < 1e-8
        assert np.all(np.abs(res.values - want) <= res.est_error + 1e-12)

    def test_small_lambda(self):
        spec = ProblemSpec(1.0, 1.0, 1e-3)
        fa = f_at_A(spec, strict=False)
        xs = np.array([0.2, 0.6])
        got = f_interior_series(xs, spec, fa, auto_truncation(spec, 1e-12, 0.6))
        assert np.max(np.abs(got - f_interior_mb(xs, spec, fa, ContourSettings(0.5, abs_tol=1e-14)))) < 1e-12

    def test_exterior_matches_contour_solution(self):
        spec = ProblemSpec(1.0, 1.0, 0.1)
        fa = f_at_A(spec, strict=False)
        xs = np.array([2.0, 10.0, 1e3])
        res = f_exterior_series(xs, spec, fa, exterior_truncation(spec, 1e-9, 2.0), full_output=True)
        want = f_exterior_mb(xs, spec, fa, ContourSettings(1.5, abs_tol=1e-13))
        assert np.max(np.abs(res.values - want)) < 1e-9
        assert np.all(np.abs(res.values - want) <= 2 * res.est_error)

    def test_exterior_truncation_uses_lambda(self):
        spec = ProblemSpec(0.5, 1.0, 0.5)
        assert exterior_truncation(spec, 1e-9, 2.0).n_max == choose_n_max(0.5, 1e-9)
        assert auto_truncation(spec, 1e-9).n_max == choose_n_max(spec.rho, 1e-9)

    def test_exterior_constant_diverges(self):
        spec = ProblemSpec(0.5, 1.0, 0.5)
        trunc = auto_truncation(spec, 1e-6, dps=None)
        with pytest.raises(SeriesDivergenceError):
            exterior_constant_sum(spec, trunc)


class TestTruncation:
    @given(st.floats(0.01, 0.95), st.floats(1e-14, 1e-2))
    def test_n_max_is_minimal(self, rho, tol):
        n = choose_n_max(rho, tol)
        assert rho ** (n + 1) / (1 - rho) <= tol / 2 * (1 + 1e-12)
        if n > 1:
            assert rho ** n / (1 - rho) > tol / 2

    def test_m_max_grows_near_A(self):
        spec = ProblemSpec(0.5, 1.0, 0.5)
        assert choose_m_max(spec, 10, 0.9, 1e-9) > choose_m_max(spec, 10, 0.5, 1e-9)

    def test_m_max_cap(self):
        assert choose_m_max(ProblemSpec(2.5, 1.0, 0.5), 30, 0.99, 1e-12, cap=500) == 500

    def test_double_precision_when_cancellation_is_mild(self):
        assert choose_dps(ProblemSpec(0.5, 1.0, 0.1), 5, 0.3, 1e-6) is None

    def test_extended_precision_for_large_a(self):
        dps = choose_dps(ProblemSpec(2.5, 1.0, 0.55), 20, 0.95, 1e-9)
        assert dps is not None and dps > 30

    @pytest.mark.parametrize("kw", [dict(n_max=0), dict(rho=1.0), dict(tol=0.0), dict(dps=10)])
    def test_validation(self, kw):
        base = dict(n_max=5, m_max=100, tol=1e-6, rho=0.5)
        base.update(kw)
        with pytest.raises(ValueError):
            SeriesTruncation(**base)
