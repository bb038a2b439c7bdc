"""
Closed-form references that share no code with the discretization.

Drifted spectrum: the mode-k radial problem of Delta_h u = -lambda u has polynomial
eigenfunctions f = sum_j a_j r^{k+2j} with lambda = (k + 2n)/2 and

    2(j+1)(2k+2j+m) a_{j+1} = ((k+2j)/2 - lambda) a_j,   a_0 = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Tuple

import numpy as np
import sympy

from .errors import InvalidArgument, require_dimension
from .modes import sphere_eigenvalue

r_sym = sympy.Symbol("r", positive=True)


def drifted_eigenvalue(m: int, k: int, n: int) -> Fraction:
    require_dimension(m)
    if k < 0 or n < 0:
        raise InvalidArgument(f"k and n must be >= 0 (got k={k}, n={n})")
    return Fraction(k + 2 * n, 2)


@dataclass(frozen=True)
class PolynomialRadialEigenfunction:
    m: int
    k: int
    n: int
    coefficients: Tuple[Fraction, ...]
    lam: Fraction

    def powers(self) -> Tuple[int, ...]:
        return tuple(self.k + 2 * j for j in range(len(self.coefficients)))

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for a, p in zip(self.coefficients, self.powers()):
            out = out + float(a) * r**p
        return out

    def evaluate_exact(self, r: Fraction, derivative: int = 0) -> Fraction:
        total = Fraction(0)
        for a, p in zip(self.coefficients, self.powers()):
            coef = a
            for d in range(derivative):
                coef *= p - d
            if coef and p - derivative >= 0:
                total += coef * r ** (p - derivative)
        return total

    def sympy_expr(self) -> sympy.Expr:
        return sum(
            (sympy.Rational(a.numerator, a.denominator) * r_sym**p for a, p in zip(self.coefficients, self.powers())),
            sympy.Integer(0),
        )

    def critical_radii(self) -> Tuple[float, ...]:
        """Positive real roots of f'."""
        slope = sympy.diff(self.sympy_expr(), r_sym)
        if slope == 0:
            return ()
        roots = sympy.Poly(slope, r_sym).nroots()
        return tuple(sorted(float(sympy.re(x)) for x in roots if abs(sympy.im(x)) < 1e-12 and sympy.re(x) > 0))


def build_polynomial_eigenfunction(m: int, k: int, n: int) -> PolynomialRadialEigenfunction:
    lam = drifted_eigenvalue(m, k, n)
    coefficients = [Fraction(1)]
    for j in range(n):
        step = Fraction(k + 2 * j, 2) - lam
        coefficients.append(step * coefficients[-1] / (2 * (j + 1) * (2 * k + 2 * j + m)))
    return PolynomialRadialEigenfunction(m=m, k=k, n=n, coefficients=tuple(coefficients), lam=lam)


def ode_residual(poly: PolynomialRadialEigenfunction) -> sympy.Expr:
    """f'' + ((m-1)/r - r/2) f' + (lambda - lambda_k / r^2) f, simplified; zero for an eigenfunction."""
    f = poly.sympy_expr()
    lam_k = sphere_eigenvalue(poly.m, poly.k)
    lam = sympy.Rational(poly.lam.numerator, poly.lam.denominator)
    expr = (
        sympy.diff(f, r_sym, 2)
        + ((poly.m - 1) / r_sym - r_sym / 2) * sympy.diff(f, r_sym)
        + (lam - sympy.Integer(lam_k) / r_sym**2) * f
    )
    return sympy.simplify(expr)


def sampled_ode_residual(poly: PolynomialRadialEigenfunction, radii: Iterable[float]) -> float:
    """Largest relative residual over the radii, evaluated in exact rational arithmetic."""
    lam_k = sphere_eigenvalue(poly.m, poly.k)
    worst = 0.0
    for radius in radii:
        r = Fraction(float(radius))
        f0 = poly.evaluate_exact(r)
        f1 = poly.evaluate_exact(r, 1)
        f2 = poly.evaluate_exact(r, 2)
        terms = (
            f2,
            Fraction(poly.m - 1) / r * f1,
            -r / 2 * f1,
            poly.lam * f0,
            -Fraction(lam_k) / (r * r) * f0,
        )
        scale = sum(abs(t) for t in terms)
        if scale:
            worst = max(worst, float(abs(sum(terms)) / scale))
    return worst


# ---------------- Comparison function y = e^{2 r^2} ----------------

def comparison_function_exact(r: float, m: int) -> float:
    return 14.0 * r * r + 4.0 * m


def comparison_function_residual(r: float, m: int) -> float:
    """
    (L y)/y for y = e^{2 r^2}, L = d^2/dr^2 + ((m-1)/r - r/2) d/dr, by central differences.

    Works on y(r +/- h)/y(r) = exp(+/-4rh + 2h^2) through expm1, so nothing overflows
    and the second difference keeps its digits.
    """
    require_dimension(m)
    if not r > 0:
        raise InvalidArgument(f"comparison residual needs r > 0 (got {r})")
    h = 1e-4 / (1.0 + 4.0 * r)
    up = 4.0 * r * h + 2.0 * h * h
    down = -4.0 * r * h + 2.0 * h * h
    d1 = (math.expm1(up) - math.expm1(down)) / (2.0 * h)
    d2 = (math.expm1(up) + math.expm1(down)) / (h * h)
    return d2 + ((m - 1) / r - 0.5 * r) * d1


# ---------------- Manufactured Poisson solution ----------------

def manufactured_solution(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return np.exp(-r * r)


def manufactured_rhs(r: np.ndarray, m: int) -> np.ndarray:
    """f = -Delta_g u* for u* = e^{-r^2}: -e^{r^2/(2(m-2))} (5r^2 - 2m) e^{-r^2}."""
    require_dimension(m)
    r = np.asarray(r, dtype=float)
    return -(5.0 * r * r - 2.0 * m) * np.exp(r * r * (1.0 / (2.0 * (m - 2)) - 1.0))


def manufactured_rhs_symbolic(m: int) -> sympy.Expr:
    require_dimension(m)
    u = sympy.exp(-(r_sym**2))
    drifted = sympy.diff(u, r_sym, 2) + ((m - 1) / r_sym - r_sym / 2) * sympy.diff(u, r_sym)
    return sympy.simplify(-sympy.exp(r_sym**2 / (2 * (m - 2))) * drifted)
