"""
Symmetric tridiagonal eigen-kernel.

Eigenvalues come from Sturm-sequence counts (multisection over many shifts at once);
eigenvectors from shifted inverse iteration on the generalized pencil A - sigma M with
diagonal M, solved as a banded system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import InvalidArgument, NumericalFailure

EPS = np.finfo(float).eps

# multisection points per bracket and sweep
SECTIONS = 15
MAX_SWEEPS = 40
MAX_BRACKET_DOUBLINGS = 2000

SHIFT_REL = 1e-8
SHIFT_FLOOR = 1e-4
RESIDUAL_RTOL = 1e-8
MAX_ITER = 8
MAX_RESTARTS = 3


@dataclass(frozen=True)
class SymTridiagonal:
    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self) -> None:
        if self.off.shape != (max(self.diag.shape[0] - 1, 0),):
            raise InvalidArgument("off-diagonal must have n-1 entries")

    @property
    def n(self) -> int:
        return int(self.diag.shape[0])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y


def reduce_pencil(diag: np.ndarray, off: np.ndarray, mass: np.ndarray) -> SymTridiagonal:
    """M^{-1/2} A M^{-1/2} for diagonal M."""
    return SymTridiagonal(diag=diag / mass, off=off / np.sqrt(mass[:-1] * mass[1:]))


def sturm_counts(t: SymTridiagonal, shifts: np.ndarray) -> np.ndarray:
    """Number of eigenvalues strictly below each shift (negative LDL^T pivots of T - shift)."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    off_sq = t.off * t.off
    counts = np.zeros(shifts.shape, dtype=np.int64)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        d = t.diag[0] - shifts
        counts += d < 0
        # a zero pivot turns the next one into -inf and the one after back to finite
        for i in range(1, t.n):
            d = (t.diag[i] - shifts) - off_sq[i - 1] / d
            counts += d < 0
    return counts


def _outer_brackets(t: SymTridiagonal, count: int) -> Tuple[float, float]:
    lo = -1.0
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if sturm_counts(t, lo)[0] == 0:
            break
        lo *= 2.0
    else:
        raise NumericalFailure("no lower bracket for the spectrum")

    hi = 1.0
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if sturm_counts(t, hi)[0] >= count:
            break
        hi *= 2.0
    else:
        raise NumericalFailure("no upper bracket for the requested eigenvalues")
    return lo, hi


def lowest_eigenvalues(t: SymTridiagonal, count: int) -> np.ndarray:
    """The `count` smallest eigenvalues of T, ascending."""
    if not 1 <= count <= t.n:
        raise InvalidArgument(f"count must lie in [1, {t.n}] (got {count})")

    lo0, hi0 = _outer_brackets(t, count)
    atol = 4.0 * EPS * max(abs(lo0), abs(hi0))
    index = np.arange(count)
    lo = np.full(count, lo0)
    hi = np.full(count, hi0)
    frac = np.arange(1, SECTIONS + 1) / (SECTIONS + 1.0)

    for _ in range(MAX_SWEEPS):
        width = hi - lo
        if np.all(width <= np.maximum(atol, 2.0 * EPS * np.maximum(np.abs(lo), np.abs(hi)))):
            break
        pts = lo[:, None] + width[:, None] * frac[None, :]
        below = sturm_counts(t, pts.ravel()).reshape(pts.shape) <= index[:, None]
        lo = np.where(below.any(axis=1), np.max(np.where(below, pts, -np.inf), axis=1), lo)
        hi = np.where((~below).any(axis=1), np.min(np.where(below, np.inf, pts), axis=1), hi)

    return 0.5 * (lo + hi)


def count_below(t: SymTridiagonal, level: float) -> int:
    return int(sturm_counts(t, level)[0])


# ---------------- Inverse iteration ----------------

def _banded(diag: np.ndarray, off: np.ndarray, mass: np.ndarray, sigma: float) -> np.ndarray:
    ab = np.zeros((3, diag.shape[0]))
    ab[0, 1:] = off
    ab[1, :] = diag - sigma * mass
    ab[2, :-1] = off
    return ab


def pencil_residual(a: SymTridiagonal, mass: np.ndarray, x: np.ndarray, lam: float) -> float:
    mx = mass * x
    denom = float(np.linalg.norm(mx))
    if denom == 0.0:
        return float("inf")
    return float(np.linalg.norm(a.matvec(x) - lam * mx)) / denom


def pencil_inverse_iteration(
    a: SymTridiagonal,
    mass: np.ndarray,
    eigenvalues: np.ndarray,
    *,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenvectors of A x = lambda M x for the given eigenvalues, M-orthonormal.

    Returns (vectors with one column per eigenvalue, residuals).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    n = a.n
    vecs = np.zeros((n, len(eigenvalues)))
    residuals = np.zeros(len(eigenvalues))

    for j, lam in enumerate(eigenvalues):
        found = _converge_one(a, mass, float(lam), vecs[:, :j], rng)
        if found is None:
            raise NumericalFailure("inverse iteration did not converge", index=j)
        vecs[:, j], residuals[j] = found
    return vecs, residuals


def _converge_one(
    a: SymTridiagonal,
    mass: np.ndarray,
    lam: float,
    previous: np.ndarray,
    rng: np.random.Generator,
) -> Optional[Tuple[np.ndarray, float]]:
    for attempt in range(MAX_RESTARTS + 1):
        sigma = lam + SHIFT_REL * max(abs(lam), SHIFT_FLOOR) * 10.0**attempt
        ab = _banded(a.diag, a.off, mass, sigma)
        x = rng.standard_normal(a.n)
        for _ in range(MAX_ITER):
            try:
                y = solve_banded((1, 1), ab, mass * x, check_finite=False)
            except (LinAlgError, ValueError):
                break
            for _ in range(2):
                y = y - previous @ (previous.T @ (mass * y))
            norm_sq = float(y @ (mass * y))
            if not np.isfinite(norm_sq) or norm_sq <= 0.0:
                break
            x = y / np.sqrt(norm_sq)
            res = pencil_residual(a, mass, x, lam)
            if res <= RESIDUAL_RTOL:
                return x, res
    return None
