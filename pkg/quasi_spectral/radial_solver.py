"""
Finite-volume discretization of the divergence-form mode equation

    -(w f')' + lambda_k (w / r^2) f = lambda * w * density * f,   w = r^{m-1} e^{-r^2/4},

on a cell-centered grid, plus the eigen and Poisson solves built on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from . import tridiagonal
from .errors import (
    IllPosedRequest,
    IncompatibleOperands,
    InvalidArgument,
    PreconditionViolation,
)
from .measure import WeightedFunction, WeightSystem, build_grid, weighted_inner_product
from .modes import ModeProblem
from .oracles import manufactured_rhs, manufactured_solution

ROUNDING_RTOL = 1e-12
ZERO_FLOOR = 1e-6
DEFAULT_RMAX_RADII = (8.0, 12.0, 16.0)


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    problem: ModeProblem
    diag: np.ndarray
    offdiag: np.ndarray
    mass: np.ndarray
    ghost: float = 0.0

    @property
    def bc_outer(self) -> str:
        return self.problem.bc_outer

    @property
    def stiffness(self) -> tridiagonal.SymTridiagonal:
        return tridiagonal.SymTridiagonal(diag=self.diag, off=self.offdiag)

    def reduced(self) -> tridiagonal.SymTridiagonal:
        return tridiagonal.reduce_pencil(self.diag, self.offdiag, self.mass)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.stiffness.matvec(np.asarray(x, dtype=float))

    def to_csr(self) -> sparse.csr_matrix:
        return sparse.diags([self.offdiag, self.diag, self.offdiag], [-1, 0, 1], format="csr")


@dataclass(frozen=True, eq=False)
class SpectralResult:
    problem: ModeProblem
    eigenvalues: np.ndarray
    eigenfunctions: Tuple[WeightedFunction, ...]
    residuals: np.ndarray


def assemble(problem: ModeProblem) -> DiscreteOperator:
    grid = problem.grid
    ws = WeightSystem(problem.m)
    dr = grid.dr
    r = grid.centers
    n = grid.n_cells

    coupling = ws.w(grid.faces[1:-1]) / dr
    diag = np.zeros(n)
    diag[:-1] += coupling
    diag[1:] += coupling

    if problem.lambda_k:
        diag += problem.lambda_k * np.exp((problem.m - 3) * np.log(r) - 0.25 * r * r) * dr

    ghost = 0.0
    if problem.bc_outer == "dirichlet":
        # ghost cell mirrored with sign flip across r_max
        ghost = 2.0 * float(ws.w(grid.r_max)) / dr
        diag[-1] += ghost

    weight = "dVg" if problem.operator == "quasi" else "gauss_quarter"
    mass = ws.radial_measure(r, weight) * dr

    ang = ws.angular_factor(problem.k)
    return DiscreteOperator(
        problem=problem,
        diag=ang * diag,
        offdiag=-ang * coupling,
        mass=ang * mass,
        ghost=ang * ghost,
    )


def eigenvalues_only(op: DiscreteOperator, count: int) -> np.ndarray:
    return tridiagonal.lowest_eigenvalues(op.reduced(), count)


def solve_eigen(op: DiscreteOperator, count: int, *, rng: Optional[np.random.Generator] = None) -> SpectralResult:
    n = op.problem.grid.n_cells
    if not 1 <= count <= n:
        raise InvalidArgument(f"count must lie in [1, n_cells={n}] (got {count})")

    eigenvalues = tridiagonal.lowest_eigenvalues(op.reduced(), count)
    vectors, residuals = tridiagonal.pencil_inverse_iteration(
        op.stiffness,
        op.mass,
        eigenvalues,
        rng=rng if rng is not None else np.random.default_rng(0),
    )

    functions: List[WeightedFunction] = []
    for j in range(count):
        x = vectors[:, j]
        if x[0] < 0:
            x = -x
        functions.append(WeightedFunction(op.problem.grid, x, op.problem.k))

    return SpectralResult(
        problem=op.problem,
        eigenvalues=eigenvalues,
        eigenfunctions=tuple(functions),
        residuals=residuals,
    )


def count_below(op: DiscreteOperator, level: float) -> int:
    return tridiagonal.count_below(op.reduced(), level)


# ---------------- Poisson ----------------

def _check_poisson(problem: ModeProblem, f: WeightedFunction) -> None:
    if problem.bc_outer == "natural" and problem.k == 0:
        raise IllPosedRequest("natural outer boundary with k=0 leaves constants in the kernel")
    if problem.operator != "quasi" or problem.bc_outer != "dirichlet":
        raise PreconditionViolation(
            f"Poisson solve needs operator=quasi with bc_outer=dirichlet (got {problem.label})"
        )
    if f.grid != problem.grid or f.mode_k != problem.k:
        raise IncompatibleOperands("right-hand side is not sampled on the problem grid / mode")


def _flux_sweep(op: DiscreteOperator, rhs: np.ndarray) -> np.ndarray:
    """
    Solve the potential-free Dirichlet system in conservation form.

    Row i reads F_{i+1/2} - F_{i-1/2} = b_i with F_{i+1/2} = c_{i+1/2} (u_i - u_{i+1}), F_{-1/2} = 0,
    and the last row closes with ghost * u_{n-1} = sum(b). Fluxes are taken as sum(b) minus suffix
    sums, then u is integrated inward from r_max.
    """
    coupling = -op.offdiag
    total = math.fsum(rhs)
    suffix = np.cumsum(rhs[::-1])[::-1]
    flux = total - suffix[1:]

    u = np.empty_like(rhs)
    u[-1] = total / op.ghost
    u[:-1] = u[-1] + np.cumsum((flux / coupling)[::-1])[::-1]
    return u


def _banded_solve(op: DiscreteOperator, rhs: np.ndarray) -> np.ndarray:
    ab = np.zeros((3, rhs.size))
    ab[0, 1:] = op.offdiag
    ab[1, :] = op.diag
    ab[2, :-1] = op.offdiag
    return solve_banded((1, 1), ab, rhs)


def solve_poisson(problem: ModeProblem, f: WeightedFunction) -> WeightedFunction:
    """
    Discrete weak form  A u = M f.

    k = 0 goes through the conservative flux sweep: its LU pivots near r_max are differences of
    couplings many orders below the largest one. k >= 1 carries a positive potential and uses a
    banded LU.
    """
    _check_poisson(problem, f)
    op = assemble(problem)
    rhs = op.mass * f.values
    u = _flux_sweep(op, rhs) if problem.lambda_k == 0 else _banded_solve(op, rhs)
    return WeightedFunction(problem.grid, u, problem.k)


def solve_poisson_reference(problem: ModeProblem, f: WeightedFunction) -> WeightedFunction:
    """Same system through a sparse direct solve."""
    _check_poisson(problem, f)
    op = assemble(problem)
    u = spsolve(op.to_csr().tocsc(), op.mass * f.values)
    return WeightedFunction(problem.grid, np.asarray(u, dtype=float), problem.k)


def poisson_residual(problem: ModeProblem, u: WeightedFunction, f: WeightedFunction) -> float:
    op = assemble(problem)
    rhs = op.mass * f.values
    res = float(np.linalg.norm(op.apply(u.values) - rhs))
    scale = float(np.linalg.norm(rhs))
    return res / scale if scale > 0 else res


def relative_l2_error(u: WeightedFunction, exact: WeightedFunction, m: int) -> float:
    diff = WeightedFunction(u.grid, u.values - exact.values, u.mode_k)
    num = weighted_inner_product(diff, diff, "dVg", m=m)
    den = weighted_inner_product(exact, exact, "dVg", m=m)
    return math.sqrt(num / den)


def manufactured_problem_error(problem: ModeProblem) -> Tuple[WeightedFunction, float]:
    """Solve with the manufactured right-hand side; return (u, relative L2(dV_g) error)."""
    grid = problem.grid
    f = WeightedFunction(grid, manufactured_rhs(grid.centers, problem.m), problem.k)
    exact = WeightedFunction(grid, manufactured_solution(grid.centers), problem.k)
    u = solve_poisson(problem, f)
    return u, relative_l2_error(u, exact, problem.m)


# ---------------- Convergence ----------------

@dataclass(frozen=True)
class ConvergenceReport:
    quantity: str
    ladder: Tuple[int, ...]
    dr: Tuple[float, ...]
    values: Tuple[float, ...]
    differences: Tuple[float, ...]
    orders: Tuple[float, ...]
    order: Optional[float]
    limit: Optional[float]
    order_defined: bool
    reason: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "quantity": self.quantity,
            "ladder": list(self.ladder),
            "dr": list(self.dr),
            "values": list(self.values),
            "differences": list(self.differences),
            "orders": list(self.orders),
            "order": self.order,
            "limit": self.limit,
            "order_defined": self.order_defined,
            "reason": self.reason,
        }


def ladder_ratio(ladder: Sequence[int]) -> int:
    if len(ladder) < 3:
        raise InvalidArgument(f"refinement ladder needs at least 3 levels (got {len(ladder)})")
    q = ladder[1] // ladder[0] if ladder[0] > 0 else 0
    if q < 2 or any(b != q * a for a, b in zip(ladder, ladder[1:])):
        raise InvalidArgument(f"ladder must grow by a constant integer ratio >= 2 (got {list(ladder)})")
    return q


def _orders_from_differences(values: Sequence[float], q: int) -> Tuple[List[float], List[float], Optional[float], str]:
    diffs = [b - a for a, b in zip(values, values[1:])]
    for d, v in zip(diffs, values[1:]):
        if abs(d) <= ROUNDING_RTOL * (1.0 + abs(v)):
            return diffs, [], None, "differences at rounding level"
    mags = [abs(d) for d in diffs]
    if any(b >= a for a, b in zip(mags, mags[1:])):
        return diffs, [], None, "non-monotone differences"
    orders = [math.log(a / b) / math.log(q) for a, b in zip(mags, mags[1:])]
    p = orders[-1]
    limit = values[-1] + diffs[-1] / (q**p - 1.0)
    return diffs, orders, limit, ""


def _orders_from_errors(errors: Sequence[float], q: int) -> Tuple[List[float], List[float], str]:
    diffs = [b - a for a, b in zip(errors, errors[1:])]
    if any(e <= ROUNDING_RTOL for e in errors):
        return diffs, [], "errors at rounding level"
    if any(b >= a for a, b in zip(errors, errors[1:])):
        return diffs, [], "non-monotone errors"
    return diffs, [math.log(a / b) / math.log(q) for a, b in zip(errors, errors[1:])], ""


def refine_and_estimate_order(
    problem: ModeProblem,
    quantity: Union[int, str],
    ladder: Sequence[int],
) -> ConvergenceReport:
    """
    Re-solve `problem` on each ladder resolution (same r_max) and estimate the observed order.

    quantity is an eigenvalue index j or "poisson" (manufactured relative error).
    """
    q = ladder_ratio(ladder)
    r_max = problem.grid.r_max
    values: List[float] = []
    drs: List[float] = []

    for n_cells in ladder:
        level = replace(problem, grid=build_grid(r_max, int(n_cells)))
        drs.append(level.grid.dr)
        if quantity == "poisson":
            values.append(manufactured_problem_error(level)[1])
        elif isinstance(quantity, int) and not isinstance(quantity, bool) and quantity >= 0:
            values.append(float(eigenvalues_only(assemble(level), quantity + 1)[quantity]))
        else:
            raise InvalidArgument(f"quantity must be an eigenvalue index or 'poisson' (got {quantity!r})")

    if quantity == "poisson":
        diffs, orders, reason = _orders_from_errors(values, q)
        limit = None
        label = "poisson_error"
    else:
        diffs, orders, limit, reason = _orders_from_differences(values, q)
        label = f"lambda_{quantity}"

    return ConvergenceReport(
        quantity=label,
        ladder=tuple(int(n) for n in ladder),
        dr=tuple(drs),
        values=tuple(values),
        differences=tuple(diffs),
        orders=tuple(orders),
        order=orders[-1] if orders else None,
        limit=limit,
        order_defined=bool(orders),
        reason=reason,
    )


# ---------------- Truncation sensitivity ----------------

@dataclass(frozen=True)
class RmaxSensitivity:
    radii: Tuple[float, ...]
    eigenvalues: Tuple[Tuple[float, ...], ...]
    max_spread: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "radii": list(self.radii),
            "eigenvalues": [list(v) for v in self.eigenvalues],
            "max_spread": self.max_spread,
        }


def rmax_sensitivity(
    problem: ModeProblem,
    count: int,
    radii: Sequence[float] = DEFAULT_RMAX_RADII,
) -> RmaxSensitivity:
    """Eigenvalues at fixed spacing on several truncation radii; spread is (max-min)/(1+|min|)."""
    dr = problem.grid.dr
    per_radius: List[Tuple[float, ...]] = []
    for radius in radii:
        level = replace(problem, grid=build_grid(float(radius), max(int(round(radius / dr)), count)))
        per_radius.append(tuple(float(v) for v in eigenvalues_only(assemble(level), count)))

    table = np.array(per_radius)
    spread = (table.max(axis=0) - table.min(axis=0)) / (1.0 + np.abs(table.min(axis=0)))
    return RmaxSensitivity(
        radii=tuple(float(r) for r in radii),
        eigenvalues=tuple(per_radius),
        max_spread=float(spread.max()),
    )


def split_ground_state(eigenvalues: Sequence[float], floor: float = ZERO_FLOOR) -> Tuple[List[float], List[float]]:
    """Partition into (values below the zero floor, the rest)."""
    ground = [float(v) for v in eigenvalues if v < floor]
    rest = [float(v) for v in eigenvalues if v >= floor]
    return ground, rest
