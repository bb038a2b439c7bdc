from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Literal, Optional, Sequence, Tuple

from .errors import InvalidArgument, require_dimension

if TYPE_CHECKING:
    from .measure import RadialGrid

Operator = Literal["quasi", "drifted"]
Boundary = Literal["dirichlet", "natural"]

OPERATORS = ("quasi", "drifted")
BOUNDARIES = ("dirichlet", "natural")
DEFAULT_BC: dict = {"quasi": "dirichlet", "drifted": "natural"}

DEFAULT_MERGE_TOL = 1e-6


def sphere_eigenvalue(m: int, k: int) -> int:
    """Eigenvalue of -Delta on S^{m-1} for degree-k harmonics."""
    require_dimension(m)
    if k < 0:
        raise InvalidArgument(f"mode index must be >= 0 (got {k})")
    return k * (k + m - 2)


def sphere_multiplicity(m: int, k: int) -> int:
    require_dimension(m)
    if k < 0:
        raise InvalidArgument(f"mode index must be >= 0 (got {k})")
    lower = math.comb(k + m - 3, k - 2) if k >= 2 else 0
    return math.comb(k + m - 1, k) - lower


@dataclass(frozen=True)
class ModeMultiplicity:
    k: int
    dim: int


def mode_multiplicities(m: int, k_lo: int, k_hi: int) -> List[ModeMultiplicity]:
    return [ModeMultiplicity(k=k, dim=sphere_multiplicity(m, k)) for k in range(k_lo, k_hi + 1)]


@dataclass(frozen=True)
class ModeProblem:
    operator: Operator
    m: int
    k: int
    lambda_k: int
    bc_outer: Boundary
    grid: "RadialGrid"

    def __post_init__(self) -> None:
        if self.operator not in OPERATORS:
            raise InvalidArgument(f"operator must be one of {OPERATORS} (got {self.operator!r})")
        if self.bc_outer not in BOUNDARIES:
            raise InvalidArgument(f"bc_outer must be one of {BOUNDARIES} (got {self.bc_outer!r})")
        if self.lambda_k != sphere_eigenvalue(self.m, self.k):
            raise InvalidArgument(f"lambda_k={self.lambda_k} does not match k(k+m-2) for k={self.k}, m={self.m}")

    @property
    def label(self) -> str:
        return f"{self.operator}/m={self.m}/k={self.k}/{self.bc_outer}"


def build_mode_problem(
    operator: Operator,
    m: int,
    k: int,
    grid: "RadialGrid",
    bc_outer: Optional[Boundary] = None,
) -> ModeProblem:
    require_dimension(m)
    if operator not in OPERATORS:
        raise InvalidArgument(f"operator must be one of {OPERATORS} (got {operator!r})")
    return ModeProblem(
        operator=operator,
        m=m,
        k=k,
        lambda_k=sphere_eigenvalue(m, k),
        bc_outer=bc_outer or DEFAULT_BC[operator],
        grid=grid,
    )


# ---------------- Full spectrum ----------------

@dataclass(frozen=True)
class SpectrumEntry:
    eigenvalue: float
    multiplicity: int
    labels: Tuple[Tuple[int, int], ...]

    def to_dict(self) -> dict:
        return {
            "lambda": self.eigenvalue,
            "multiplicity": self.multiplicity,
            "labels": [{"k": k, "n": n} for k, n in self.labels],
        }


def assemble_full_spectrum(
    per_mode: Sequence[Tuple[int, Sequence[float]]],
    m: int,
    tol: float = DEFAULT_MERGE_TOL,
) -> List[SpectrumEntry]:
    """
    Merge per-mode radial eigenvalues into the spectrum of the full operator.

    Each radial eigenvalue of mode k carries sphere_multiplicity(m, k). Values within
    tol * (1 + |lambda|) of the first member of a cluster are merged.
    """
    require_dimension(m)
    if not tol > 0:
        raise InvalidArgument(f"merge tolerance must be positive (got {tol})")

    flat: List[Tuple[float, int, int]] = []
    for k, values in per_mode:
        values = [float(v) for v in values]
        if any(b < a for a, b in zip(values, values[1:])):
            raise InvalidArgument(f"eigenvalues of mode k={k} are not sorted ascending")
        flat.extend((lam, k, n) for n, lam in enumerate(values))
    flat.sort()

    entries: List[SpectrumEntry] = []
    head: Optional[float] = None
    mult = 0
    labels: List[Tuple[int, int]] = []
    for lam, k, n in flat:
        if head is not None and abs(lam - head) <= tol * (1.0 + abs(head)):
            mult += sphere_multiplicity(m, k)
            labels.append((k, n))
            continue
        if head is not None:
            entries.append(SpectrumEntry(head, mult, tuple(labels)))
        head, mult, labels = lam, sphere_multiplicity(m, k), [(k, n)]
    if head is not None:
        entries.append(SpectrumEntry(head, mult, tuple(labels)))
    return entries
