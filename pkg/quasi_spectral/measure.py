"""
Radial grids, the weights of the conformal metric, and the quadratures built on them.

Every integral here is radial: an integrand sampled at cell centers times r^{m-1},
times an angular factor that is either the sphere area omega (radial functions)
or 1 (products of two L2-orthonormal harmonics of the same degree).

Weights (m >= 3):
  w(r)            = r^{m-1} e^{-r^2/4}        Sturm-Liouville / flux weight
  rho_g(r)        = e^{-r^2/(2(m-2))}         spectral density of the quasi-Laplacian
  vol_density(r)  = e^{-m r^2/(4(m-2))}       density of dV_g w.r.t. dx
  gauss_quarter(r)= e^{-r^2/4}                density of the drifted measure
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal

import numpy as np
from scipy import integrate, special

from .errors import IncompatibleOperands, InvalidArgument, require_dimension
from .modes import sphere_eigenvalue

Weight = Literal["dVg", "gauss_quarter"]
WEIGHTS = ("dVg", "gauss_quarter")

MIN_CELLS = 2
TAIL_RTOL = 1e-13
# e^{-750} is below the smallest subnormal; the tail past it does not exist in float64.
_TAIL_EXPONENT_CUTOFF = 750.0


# ---------------- Grid ----------------

@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n_cells: int

    @cached_property
    def dr(self) -> float:
        return self.r_max / self.n_cells

    @cached_property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells, dtype=float) + 0.5) * self.dr

    @cached_property
    def faces(self) -> np.ndarray:
        faces = np.arange(self.n_cells + 1, dtype=float) * self.dr
        faces[-1] = self.r_max
        return faces


def build_grid(r_max: float, n_cells: int) -> RadialGrid:
    if not np.isfinite(r_max) or r_max <= 0:
        raise InvalidArgument(f"r_max must be positive (got {r_max})")
    if isinstance(n_cells, bool) or not isinstance(n_cells, (int, np.integer)) or n_cells < MIN_CELLS:
        raise InvalidArgument(f"n_cells must be an integer >= {MIN_CELLS} (got {n_cells})")
    return RadialGrid(r_max=float(r_max), n_cells=int(n_cells))


# ---------------- Weights ----------------

@dataclass(frozen=True)
class WeightSystem:
    m: int

    def __post_init__(self) -> None:
        require_dimension(self.m)

    @property
    def omega(self) -> float:
        """Surface area of the unit (m-1)-sphere, 2 pi^{m/2} / Gamma(m/2)."""
        half = 0.5 * self.m
        return math.exp(math.log(2.0) + half * math.log(math.pi) - special.gammaln(half))

    @property
    def rho_exponent(self) -> float:
        return 1.0 / (2.0 * (self.m - 2))

    @property
    def vol_exponent(self) -> float:
        return self.m / (4.0 * (self.m - 2))

    def log_w(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return (self.m - 1) * np.log(r) - 0.25 * r * r

    def w(self, r: np.ndarray) -> np.ndarray:
        return np.exp(self.log_w(r))

    def rho_g(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.exp(-self.rho_exponent * r * r)

    def vol_density(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.exp(-self.vol_exponent * r * r)

    def gauss_quarter(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.exp(-0.25 * r * r)

    def exponent(self, weight: Weight) -> float:
        if weight == "dVg":
            return self.vol_exponent
        if weight == "gauss_quarter":
            return 0.25
        raise InvalidArgument(f"unknown weight {weight!r} (expected one of {WEIGHTS})")

    def radial_measure(self, r: np.ndarray, weight: Weight) -> np.ndarray:
        """density(r) * r^{m-1}, exponentiated last."""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return np.exp((self.m - 1) * np.log(r) - self.exponent(weight) * r * r)

    def spectral_density(self, operator: str) -> Callable[[np.ndarray], np.ndarray]:
        if operator == "quasi":
            return self.rho_g
        if operator == "drifted":
            return lambda r: np.ones_like(np.asarray(r, dtype=float))
        raise InvalidArgument(f"unknown operator {operator!r}")

    def angular_factor(self, mode_k: int) -> float:
        return self.omega if mode_k == 0 else 1.0


# ---------------- Sampled functions ----------------

@dataclass(frozen=True, eq=False)
class WeightedFunction:
    grid: RadialGrid
    values: np.ndarray
    mode_k: int = 0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_cells,):
            raise InvalidArgument(
                f"values must have length n_cells={self.grid.n_cells} (got shape {values.shape})"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArgument("values must be finite")
        if self.mode_k < 0:
            raise InvalidArgument(f"mode_k must be >= 0 (got {self.mode_k})")
        object.__setattr__(self, "values", values)

    def scaled(self, factor: float) -> "WeightedFunction":
        return WeightedFunction(self.grid, factor * self.values, self.mode_k)


def sample(grid: RadialGrid, fn: Callable[[np.ndarray], np.ndarray], mode_k: int = 0) -> WeightedFunction:
    values = np.broadcast_to(np.asarray(fn(grid.centers), dtype=float), (grid.n_cells,))
    return WeightedFunction(grid, np.array(values), mode_k)


def _check_compatible(f: WeightedFunction, g: WeightedFunction) -> None:
    if f.grid != g.grid:
        raise IncompatibleOperands(
            f"grids differ: (r_max={f.grid.r_max}, n={f.grid.n_cells}) "
            f"vs (r_max={g.grid.r_max}, n={g.grid.n_cells})"
        )
    if f.mode_k != g.mode_k:
        raise IncompatibleOperands(f"mode_k differs: {f.mode_k} vs {g.mode_k}")


# ---------------- Quadrature ----------------

def quadrature_weights(grid: RadialGrid, m: int, weight: Weight, mode_k: int = 0) -> np.ndarray:
    """Midpoint weights density(r_i) r_i^{m-1} dr times the angular factor."""
    ws = WeightSystem(m)
    return ws.radial_measure(grid.centers, weight) * grid.dr * ws.angular_factor(mode_k)


def weighted_inner_product(f: WeightedFunction, g: WeightedFunction, weight: Weight, *, m: int) -> float:
    _check_compatible(f, g)
    q = quadrature_weights(f.grid, m, weight, f.mode_k)
    return float(np.sum(f.values * g.values * q))


def weighted_energy(f: WeightedFunction, m: int, weight: Weight = "gauss_quarter") -> float:
    """
    Mode-k Dirichlet energy  int (f'^2 + lambda_k f^2 / r^2) density r^{m-1} dr  (times angular factor).

    f' is the face difference at interior faces; the r = 0 face carries zero weight
    and the r_max face has no outer neighbour.
    """
    ws = WeightSystem(m)
    grid = f.grid
    interior = grid.faces[1:-1]
    slopes = np.diff(f.values) / grid.dr
    energy = float(np.sum(ws.radial_measure(interior, weight) * slopes * slopes) * grid.dr)

    lam_k = sphere_eigenvalue(m, f.mode_k)
    if lam_k:
        r = grid.centers
        energy += float(lam_k * np.sum(ws.radial_measure(r, weight) * f.values**2 / (r * r)) * grid.dr)

    return energy * ws.angular_factor(f.mode_k)


def total_measure(m: int, weight: Weight = "dVg") -> float:
    """Closed form of omega * int_0^inf r^{m-1} e^{-a r^2} dr = (pi / a)^{m/2}."""
    a = WeightSystem(m).exponent(weight)
    return (math.pi / a) ** (0.5 * m)


# ---------------- Tails ----------------

def _scaled_tail(r: float, m: int) -> float:
    """
    J(r) = int_0^inf (r+t)^{m-3} e^{-(2rt + t^2)/4} dt, so that
    int_r^inf s^{m-3} e^{-s^2/4} ds = J(r) e^{-r^2/4}.
    """
    t_max = math.sqrt(r * r + 4.0 * _TAIL_EXPONENT_CUTOFF) - r

    def integrand(t: float) -> float:
        return (r + t) ** (m - 3) * math.exp(-(2.0 * r * t + t * t) / 4.0)

    value, _err = integrate.quad(integrand, 0.0, t_max, epsabs=0.0, epsrel=TAIL_RTOL, limit=200)
    return float(value)


def tail_integral(r: float, m: int) -> float:
    if not r > 0:
        raise InvalidArgument(f"tail_integral needs r > 0 (got {r})")
    return _scaled_tail(float(r), m) * math.exp(-0.25 * r * r)


def tail_ratio(r: float, m: int) -> float:
    """int_r^inf s^{m-3} e^{-s^2/4} ds / (r^{m-1} e^{-r^2/4}); r^3 times this tends to 2."""
    if not r >= 1:
        raise InvalidArgument(f"tail_ratio needs r >= 1 (got {r})")
    return _scaled_tail(float(r), m) / float(r) ** (m - 1)


def truncation_bound(r_max: float, m: int) -> float:
    """gauss_quarter mass outside the truncation ball."""
    return WeightSystem(m).omega * tail_integral(r_max, m + 2)


def radius_for_tail_measure(delta: float, m: int) -> float:
    """R with mu_g({r > R}) = delta for the dV_g measure."""
    mu = total_measure(m, "dVg")
    if not 0 < delta < mu:
        raise InvalidArgument(f"delta must lie in (0, {mu}) (got {delta})")
    a = WeightSystem(m).vol_exponent
    return math.sqrt(float(special.gammainccinv(0.5 * m, delta / mu)) / a)
