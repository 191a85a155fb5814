import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dixon import specfun
from dixon.specfun import PoleError


def test_log_gamma_known_values():
    assert specfun.log_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
    assert specfun.log_gamma(0.5).real == pytest.approx(0.5723649429247001, rel=1e-13)


@pytest.mark.parametrize("s", [2 + 3j, 0.3 - 40j, -7.5 + 0.25j, 45 + 280j, -19.2 + 1j])
def test_log_gamma_matches_multiprecision(s):
    want = complex(mpmath.loggamma(mpmath.mpc(s)))
    got = specfun.log_gamma(s)
    assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


@given(st.floats(-8, 8), st.floats(-50, 50))
def test_reflection(x, y):
    s = complex(x, y)
    if abs(y) < 1e-3 and abs(x - round(x)) < 1e-3:
        return
    lhs = np.exp(specfun.log_gamma(s) + specfun.log_gamma(1 - s))
    rhs = complex(mpmath.pi / mpmath.sin(mpmath.pi * mpmath.mpc(s)))
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_pole_rejected():
    with pytest.raises(PoleError):
        specfun.log_gamma(-3.0)


def test_beta_values():
    assert specfun.beta(1.0, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert specfun.beta(0.5, 1.5) == pytest.approx(math.pi / 2, rel=1e-13)


def test_beta_on_contour_against_mellin_integral():
    a, s = 0.5, 0.3 + 2j
    want = mpmath.quad(lambda x: x ** (a + s - 1) * (1 + x) ** (-1 - 2 * a), [0, 1, mpmath.inf])
    assert abs(specfun.beta(a + s, a + 1 - s) - complex(want)) < 1e-9


@pytest.mark.parametrize("n,x,want", [(0, 1.0, -0.5772156649015329), (1, 1.0, math.pi**2 / 6),
                                      (0, 2.0, 1 - 0.5772156649015329)])
def test_polygamma_examples(n, x, want):
    assert specfun.polygamma(n, x) == pytest.approx(want, rel=1e-13)


@given(st.integers(0, 40), st.floats(0.05, 100))
def test_polygamma_against_mpmath(n, x):
    want = float(mpmath.polygamma(n, x))
    assert abs(specfun.polygamma(n, x) - want) <= 1e-12 * max(1.0, abs(want))


def test_polygamma_domain():
    with pytest.raises(ValueError):
        specfun.polygamma(1, 0.0)


@pytest.mark.parametrize("n,want", [(0, 1.0), (1, -0.5), (2, 1 / 6), (7, 0.0), (12, -691 / 2730)])
def test_bernoulli(n, want):
    assert specfun.bernoulli(n) == pytest.approx(want, abs=1e-16)


def test_bernoulli_range():
    with pytest.raises(OverflowError):
        specfun.bernoulli(61)


@pytest.mark.parametrize("n", range(1, 11))
def test_bernoulli_via_zeta(n):
    via = (-1) ** (n + 1) * 2 * math.factorial(2 * n) * float(mpmath.zeta(2 * n)) / (2 * math.pi) ** (2 * n)
    assert specfun.bernoulli(2 * n) == pytest.approx(via, rel=1e-10)


def test_gamma_derivs_examples():
    g = specfun.gamma_derivs(1.0, 1)
    assert g == pytest.approx([1.0, -0.5772156649015329], rel=1e-13)
    g = specfun.gamma_derivs(2.0, 1)
    assert g == pytest.approx([1.0, 1 - 0.5772156649015329], rel=1e-13)


def _richardson_derivative(f, x, order, h=0.05):
    """Central difference of the given order at steps h and h/2, combined to cancel the h^2 term."""
    def central(step):
        with mpmath.workdps(40):
            step = mpmath.mpf(step)
            total = mpmath.fsum((-1) ** k * math.comb(order, k) * f(x + (order / 2 - k) * step)
                                for k in range(order + 1))
            return float(total / step**order)
    return (4 * central(h / 2) - central(h)) / 3


@pytest.mark.parametrize("x", [1.5, 3.5, 7.0])
def test_gamma_derivs_against_finite_differences(x):
    g = specfun.gamma_derivs(x, 4)
    for nu in range(5):
        fd = _richardson_derivative(mpmath.gamma, x, nu, h=0.02)
        assert g[nu] == pytest.approx(fd, rel=1e-6)


def test_gamma_derivs_mp_and_scaled():
    g = specfun.gamma_derivs(3.5, 3)
    gs = specfun.gamma_derivs(3.5, 3, scaled=True)
    gm = specfun.gamma_derivs(3.5, 3, dps=40)
    for v in range(4):
        assert gs[v] * g[0] == pytest.approx(g[v], rel=1e-13)
        assert float(gm[v]) == pytest.approx(g[v], rel=1e-13)


def test_recip_gamma_derivs():
    assert specfun.recip_gamma_derivs(0, 0).d[0] == 1.0
    assert specfun.recip_gamma_derivs(0, 1).d[1] == pytest.approx(0.5772156649015329, rel=1e-13)
    rec = specfun.recip_gamma_derivs(3, 2)
    taylor = [v / math.factorial(j) for j, v in enumerate(specfun.gamma_derivs(4.0, 2))]
    rtay = [v / math.factorial(j) for j, v in enumerate(rec.d)]
    conv = [sum(taylor[j] * rtay[k - j] for j in range(k + 1)) for k in range(3)]
    assert conv == pytest.approx([1.0, 0.0, 0.0], abs=1e-10)


def test_recip_gamma_matches_mpmath():
    rec = specfun.recip_gamma_derivs(4, 5)
    for v in range(6):
        want = float(mpmath.diff(mpmath.rgamma, 5, v))
        assert rec.d[v] == pytest.approx(want, rel=1e-10, abs=1e-14)


class TestLaurent:
    table = specfun.laurent_coeffs(10, 12)

    def test_examples(self):
        assert self.table.c[0, 0] == 1.0
        assert self.table.c[1, 0] == pytest.approx(-0.5772156649015329, rel=1e-14)
        assert self.table.c[1, 3] == pytest.approx((11 / 6 - 0.5772156649015329) / 6, rel=1e-13)

    def test_c1_against_sampled_fit(self):
        # independent route: fit z Gamma(z) near 0 from samples at u = +-1e-3, +-2e-3
        us = np.array([-2e-3, -1e-3, 1e-3, 2e-3])
        vals = np.array([float(u * mpmath.gamma(u)) for u in us])
        coef = np.polyfit(us, vals, 3)
        assert coef[-2] == pytest.approx(self.table.c[1, 0], rel=1e-6)

    def test_first_rows(self):
        for m in range(11):
            assert self.table.c[0, m] == pytest.approx(1 / math.factorial(m), rel=1e-12)
            want = float(mpmath.digamma(m + 1)) / math.factorial(m)
            assert self.table.c[1, m] == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("m", range(7))
    def test_pole_approach(self, m):
        eps = 0.05
        approx = (-1) ** m / eps * sum(self.table.c[k, m] * eps**k for k in range(13))
        assert approx == pytest.approx(float(mpmath.gamma(-m + eps)), rel=1e-9)

    def test_scaled_twin(self):
        for m in range(11):
            np.testing.assert_allclose(self.table.scaled[:, m], self.table.c[:, m] * math.factorial(m), rtol=1e-13)

    def test_bernoulli_form_agrees(self):
        # the Bernoulli-number construction with integer sign exponents reproduces the table
        bern = specfun.laurent_coeffs_bernoulli(8, 10)
        np.testing.assert_allclose(bern, self.table.c[:11, :9], atol=1e-12)

    def test_mp_table(self):
        mp_table = specfun.laurent_coeffs(5, 6, dps=40)
        for m in range(6):
            for k in range(7):
                assert float(mp_table.c[k, m]) == pytest.approx(self.table.c[k, m], rel=1e-13, abs=1e-300)

    def test_column_bounds(self):
        with pytest.raises(IndexError):
            self.table.column(11)
        with pytest.raises(IndexError):
            self.table.column(0, 13)
