from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from quasi_spectral.errors import InvalidArgument, UnsupportedDimension
from quasi_spectral.measure import build_grid, sample, weighted_inner_product
from quasi_spectral.oracles import (
    build_polynomial_eigenfunction,
    comparison_function_exact,
    comparison_function_residual,
    drifted_eigenvalue,
    manufactured_rhs,
    manufactured_rhs_symbolic,
    manufactured_solution,
    ode_residual,
    r_sym,
    sampled_ode_residual,
)


@pytest.mark.parametrize("k, n, expected", [(0, 0, 0), (1, 0, Fraction(1, 2)), (0, 1, 1), (3, 2, Fraction(7, 2))])
def test_drifted_eigenvalue(k, n, expected):
    assert drifted_eigenvalue(3, k, n) == expected


def test_drifted_eigenvalue_rejects_bad_input():
    with pytest.raises(UnsupportedDimension):
        drifted_eigenvalue(2, 0, 0)
    with pytest.raises(InvalidArgument):
        drifted_eigenvalue(3, 0, -1)


# ---------------- Polynomial eigenfunctions ----------------

def test_coefficients_ground_radial_mode():
    poly = build_polynomial_eigenfunction(3, 0, 1)
    assert poly.coefficients == (Fraction(1), Fraction(-1, 6))
    assert poly.powers() == (0, 2)
    assert poly.lam == 1


def test_coefficients_without_correction():
    for m in (3, 4, 7):
        poly = build_polynomial_eigenfunction(m, 2, 0)
        assert poly.coefficients == (Fraction(1),)
        assert poly.powers() == (2,)


def test_coefficients_first_harmonic_in_four_dimensions():
    poly = build_polynomial_eigenfunction(4, 1, 1)
    assert poly.coefficients == (Fraction(1), Fraction(-1, 12))
    assert poly.powers() == (1, 3)


@pytest.mark.parametrize("m", [3, 4, 5])
@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_ode_residual_vanishes_symbolically(m, k, n):
    assert ode_residual(build_polynomial_eigenfunction(m, k, n)) == 0


@pytest.mark.parametrize("m, k, n", [(3, 0, 3), (4, 2, 2), (6, 1, 4)])
def test_sampled_residual_vanishes(m, k, n):
    radii = np.random.default_rng(42).uniform(0.0, 8.0, 100)
    assert sampled_ode_residual(build_polynomial_eigenfunction(m, k, n), radii) <= 1e-10


def test_sampled_residual_detects_wrong_eigenvalue():
    poly = build_polynomial_eigenfunction(3, 0, 1)
    wrong = type(poly)(m=poly.m, k=poly.k, n=poly.n, coefficients=poly.coefficients, lam=Fraction(2))
    assert sampled_ode_residual(wrong, [1.0, 2.0, 3.0]) > 1e-3


def test_evaluate_matches_exact():
    poly = build_polynomial_eigenfunction(5, 1, 3)
    r = np.linspace(0.1, 6.0, 25)
    exact = [float(poly.evaluate_exact(Fraction(float(x)))) for x in r]
    np.testing.assert_allclose(poly.evaluate(r), exact, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("m", [3, 4])
@pytest.mark.parametrize("k", [0, 1])
def test_polynomial_eigenfunctions_are_orthogonal(m, k):
    grid = build_grid(12.0, 2400)
    fns = [sample(grid, build_polynomial_eigenfunction(m, k, n).evaluate, mode_k=k) for n in range(3)]
    for i in range(3):
        for j in range(i + 1, 3):
            cross = weighted_inner_product(fns[i], fns[j], "gauss_quarter", m=m)
            norms = math.sqrt(
                weighted_inner_product(fns[i], fns[i], "gauss_quarter", m=m)
                * weighted_inner_product(fns[j], fns[j], "gauss_quarter", m=m)
            )
            assert abs(cross) <= 1e-6 * norms


def test_critical_radii():
    poly = build_polynomial_eigenfunction(3, 1, 1)
    (root,) = poly.critical_radii()
    assert root == pytest.approx(math.sqrt(10.0 / 3.0), rel=1e-10)
    assert build_polynomial_eigenfunction(3, 0, 0).critical_radii() == ()


# ---------------- Comparison function ----------------

@pytest.mark.parametrize("r, m, expected", [(1.0, 3, 26.0), (2.0, 4, 72.0)])
def test_comparison_function_exact(r, m, expected):
    assert comparison_function_exact(r, m) == expected


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 4.0, 8.0])
@pytest.mark.parametrize("m", [3, 4, 6])
def test_comparison_residual_matches_closed_form(r, m):
    assert comparison_function_residual(r, m) == pytest.approx(comparison_function_exact(r, m), rel=1e-6)


def test_comparison_residual_rejects_nonpositive_radius():
    with pytest.raises(InvalidArgument):
        comparison_function_residual(0.0, 3)


# ---------------- Manufactured Poisson ----------------

@pytest.mark.parametrize("m", [3, 4, 5])
def test_manufactured_rhs_matches_symbolic(m):
    symbolic = sympy.lambdify(r_sym, manufactured_rhs_symbolic(m), "numpy")
    r = np.linspace(0.05, 6.0, 120)
    np.testing.assert_allclose(manufactured_rhs(r, m), symbolic(r), rtol=1e-10, atol=1e-12)


def test_manufactured_solution_values():
    np.testing.assert_allclose(manufactured_solution(np.array([0.0, 1.0])), [1.0, math.exp(-1.0)])
