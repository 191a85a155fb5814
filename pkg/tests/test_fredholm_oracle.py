import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from dixon.core import ProblemSpec, apply_operator, residual_supnorm
from dixon.fredholm_oracle import (
    SingularSystemError,
    graded_rule,
    nystrom_eval,
    nystrom_solve,
    picard_iteration_bound,
    picard_solve,
    singular_exponent,
    system_matrix,
)
from dixon.specfun import beta


def first_order(x, spec):
    """x^(a+1)/B0 int_0^A y^(a-1) (x+y)^(-1-2a) dy = I_{A/(A+x)}(a, a+1)."""
    return special.betainc(spec.a, spec.a + 1, spec.A / (spec.A + np.asarray(x)))


@pytest.fixture(scope="module")
def half_grid():
    spec = ProblemSpec(0.5, 1.0, 0.5)
    return spec, nystrom_solve(spec, 512)


class TestGradedRule:
    @pytest.mark.parametrize("a", [0.5, 1.0, 2.5])
    @pytest.mark.parametrize("k", [0.0, 0.3, 2.0, 7.5])
    def test_moments(self, a, k):
        spec = ProblemSpec(a, 2.0, 0.1)
        nodes, w = graded_rule(512, spec)
        assert np.sum(w * nodes**k) == pytest.approx(2.0 ** (a + k) / (a + k), rel=1e-12)

    def test_nodes_sorted_inside_interval(self):
        spec = ProblemSpec(0.5, 1.0, 0.5)
        nodes, w = graded_rule(300, spec)
        assert np.all(np.diff(nodes) > 0) and nodes[0] > 0 and nodes[-1] < 1.0
        assert np.all(w > 0)


class TestSingularExponent:
    @pytest.mark.parametrize("a,lam", [(0.5, 0.5), (1.0, 0.4), (2.5, 0.552)])
    def test_root(self, a, lam):
        spec = ProblemSpec(a, 1.0, lam)
        s = singular_exponent(spec)
        assert -a < s < 0
        assert lam * float(beta(a + s, a + 1 - s)) == pytest.approx(spec.b0, rel=1e-10)

    def test_known_value(self):
        assert singular_exponent(ProblemSpec(0.5, 1.0, 0.5)) == pytest.approx(-0.2364844, abs=1e-6)


class TestNystrom:
    def test_first_order_in_lambda(self):
        spec = ProblemSpec(0.7, 1.0, 1e-4)
        xs = np.linspace(0.01, 1.0, 9)
        got = nystrom_eval(nystrom_solve(spec, 256), spec, xs)
        assert np.max(np.abs(got - 1 - spec.lam * first_order(xs, spec))) < 5e-8

    def test_equation_residual_by_adaptive_quadrature(self, half_grid):
        spec, grid = half_grid
        a = spec.a
        for x in (0.03, 0.4, 1.0):
            def integrand(y):
                return (y + x) ** (-1 - 2 * a) * nystrom_eval(grid, spec, y).real
            pts = [10.0**-k for k in range(1, 9)]
            val = sum(
                integrate.quad(integrand, lo, hi, weight="alg", wvar=(a - 1, 0), epsabs=1e-14, epsrel=1e-13,
                               limit=200)[0] if lo == 0 else
                integrate.quad(lambda y: y ** (a - 1) * integrand(y), lo, hi, epsabs=1e-14, epsrel=1e-13,
                               limit=200)[0]
                for lo, hi in zip([0.0] + pts[::-1], pts[::-1] + [1.0])
            )
            rhs = 1 + spec.lam.real * x ** (a + 1) / spec.b0 * val
            assert nystrom_eval(grid, spec, x).real == pytest.approx(rhs, abs=1e-8)

    def test_jump_at_zero(self, half_grid):
        # f(0) = 1, while f(x) -> 1 / (1 - lam) as x -> 0+
        spec, grid = half_grid
        assert nystrom_eval(grid, spec, 0.0) == 1.0
        near = nystrom_eval(grid, spec, np.array([1e-8, 1e-12])).real
        assert np.all(np.abs(near - 1 / (1 - 0.5)) < 1e-5)

    def test_exact_at_nodes(self, half_grid):
        spec, grid = half_grid
        assert nystrom_eval(grid, spec, grid.nodes[7]) == grid.f_values[7]

    def test_refinement(self, half_grid):
        spec, grid = half_grid
        xs = np.linspace(0, 1, 21)
        fine = nystrom_solve(spec, 1024)
        assert np.max(np.abs(nystrom_eval(grid, spec, xs) - nystrom_eval(fine, spec, xs))) < 1e-7

    @pytest.mark.xfail(strict=True, reason="the x^0.236 mode at a = lam = 0.5 limits 128 nodes to about 3e-4")
    def test_128_vs_512_within_1e9(self, half_grid):
        spec, grid = half_grid
        xs = np.linspace(0, 1, 21)
        coarse = nystrom_solve(spec, 128)
        assert np.max(np.abs(nystrom_eval(grid, spec, xs) - nystrom_eval(coarse, spec, xs))) < 1e-9

    @pytest.mark.parametrize("a,lam", [(1.0, 0.4), (2.5, 0.552)])
    def test_fast_convergence_for_larger_a(self, a, lam):
        spec = ProblemSpec(a, 1.0, lam)
        xs = np.linspace(0, 1, 21)
        f1 = nystrom_eval(nystrom_solve(spec, 512), spec, xs)
        f2 = nystrom_eval(nystrom_solve(spec, 1024), spec, xs)
        assert np.max(np.abs(f1 - f2)) < 1e-11

    def test_residual_supnorm(self, half_grid):
        spec, grid = half_grid
        r = residual_supnorm(lambda x: nystrom_eval(grid, spec, x), spec, 512, 41)
        assert r < 1e-7

    def test_jacobi_mesh_is_worse(self, half_grid):
        spec, grid = half_grid
        xs = np.linspace(0.05, 1, 20)
        jac = nystrom_solve(spec, 256, mesh="jacobi")
        assert np.max(np.abs(nystrom_eval(jac, spec, xs) - nystrom_eval(grid, spec, xs))) > 1e-6

    def test_singular_above_one(self):
        spec = ProblemSpec(0.5, 1.0, 1.5)
        c128 = nystrom_solve(spec, 128).meta["cond"]
        c256 = nystrom_solve(spec, 256).meta["cond"]
        assert c256 > 1e3 * c128
        with pytest.raises(SingularSystemError):
            nystrom_solve(spec, 512)

    def test_complex_lambda_conjugation(self):
        s1, s2 = ProblemSpec(1.0, 1.0, 0.2 + 0.1j), ProblemSpec(1.0, 1.0, 0.2 - 0.1j)
        xs = np.linspace(0, 1, 5)
        f1 = nystrom_eval(nystrom_solve(s1, 128), s1, xs)
        f2 = nystrom_eval(nystrom_solve(s2, 128), s2, xs)
        assert np.allclose(f1, np.conj(f2), atol=1e-13)

    @pytest.mark.parametrize("n", [4, 4096])
    def test_size_limits(self, n):
        with pytest.raises(ValueError):
            nystrom_solve(ProblemSpec(0.5, 1.0, 0.5), n)

    def test_outside_interval(self, half_grid):
        spec, grid = half_grid
        with pytest.raises(ValueError):
            nystrom_eval(grid, spec, 1.5)


class TestPicard:
    def test_agrees_with_nystrom(self, half_grid):
        spec, grid = half_grid
        pic = picard_solve(spec, 512)
        assert np.max(np.abs(pic.f_values - grid.f_values)) < 1e-12

    @pytest.mark.parametrize("lam", [0.2, 0.5])
    def test_contraction_at_most_lambda(self, lam):
        # the L-infinity operator norm is |lam| sup_x I_{A/(A+x)}(a, a+1) = |lam|
        spec = ProblemSpec(0.5, 1.0, lam)
        pic = picard_solve(spec, 256)
        assert pic.meta["contraction"] <= lam * (1 + 1e-9)
        assert pic.meta["iterations"] <= math.ceil(math.log(1e-13) / math.log(lam)) + 2

    def test_row_sums_bounded_by_lambda(self):
        spec = ProblemSpec(1.0, 1.0, 0.4)
        nodes, w = graded_rule(512, spec)
        rows = np.abs(system_matrix(nodes, w, spec)).sum(axis=1)
        assert np.all(rows <= 0.4 * (1 + 1e-10))
        inner = nodes > 1e-6
        assert np.allclose(rows[inner], 0.4 * first_order(nodes[inner], spec), rtol=1e-9)

    def test_bound_formula(self):
        assert picard_iteration_bound(0.5, 1e-3) == math.ceil(math.log(1e-3) / math.log(0.5)) + 2


@settings(max_examples=15)
@given(st.floats(0.3, 2.5), st.floats(0.01, 0.4))
def test_solution_satisfies_discrete_equation(a, lam):
    spec = ProblemSpec(a, 1.0, lam)
    grid = nystrom_solve(spec, 128)
    f = grid.f_values
    back = 1 + apply_operator(grid.nodes, grid.nodes, grid.weights, f, spec)
    assert np.max(np.abs(back - f)) < 1e-12 * np.max(np.abs(f))
