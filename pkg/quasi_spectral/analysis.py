"""
Verifiers for the functional inequalities and the asymptotic claims about the mode equations.

All checks take sampled radial functions and return plain report records; nothing here
solves an eigenproblem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import xlogy

from .errors import DegenerateWindow, InvalidArgument, PreconditionViolation
from .measure import (
    RadialGrid,
    Weight,
    WeightedFunction,
    WeightSystem,
    quadrature_weights,
    radius_for_tail_measure,
    tail_ratio,
    weighted_energy,
    weighted_inner_product,
)
from .modes import ModeProblem
from .oracles import comparison_function_exact, comparison_function_residual

PASS_RTOL = 1e-12
LITERAL_BOUNDARY_RTOL = 1e-8
MIN_FIT_SAMPLES = 20

VANISH_TOL = 1e-6
GROW_FACTOR = 10.0

COMPARISON_RTOL = 1e-6
TAIL_LIMIT = 2.0

NORMALIZATION = "int u^2 dmu = mu(M)"


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    margin: float
    constant_used: float
    test_function: str
    passed: bool
    normalization: str = ""

    @classmethod
    def build(
        cls,
        name: str,
        lhs: float,
        rhs: float,
        *,
        constant_used: float,
        test_function: str,
        normalization: str = "",
    ) -> "InequalityReport":
        margin = float(rhs) - float(lhs)
        return cls(
            name=name,
            lhs=float(lhs),
            rhs=float(rhs),
            margin=margin,
            constant_used=float(constant_used),
            test_function=test_function,
            passed=bool(margin >= -PASS_RTOL * (1.0 + abs(float(rhs)))),
            normalization=normalization,
        )

    @property
    def ratio(self) -> Optional[float]:
        return self.lhs / self.rhs if self.rhs else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "ratio": self.ratio,
            "constant_used": self.constant_used,
            "test_function": self.test_function,
            "normalization": self.normalization,
            "passed": self.passed,
        }


# ---------------- Inequalities ----------------

def _normalize_to_measure(u: WeightedFunction, m: int, weight: Weight) -> Tuple[WeightedFunction, np.ndarray]:
    q = quadrature_weights(u.grid, m, weight, u.mode_k)
    norm = float(np.sum(u.values * u.values * q))
    if norm <= 0.0:
        raise PreconditionViolation("test function is identically zero")
    return u.scaled(math.sqrt(float(np.sum(q)) / norm)), q


def check_log_sobolev(
    u: WeightedFunction,
    m: int,
    *,
    weight: Weight = "dVg",
    name: str = "log_sobolev",
    test_function: str = "",
) -> InequalityReport:
    """
    int u^2 log u^2 dmu <= C int |u'|^2 dmu for u normalized to int u^2 dmu = mu(M).

    dmu is the Gaussian measure e^{-a r^2} r^{m-1} omega dr and C = 1/a: 4(m-2)/m for dV_g,
    4 for the drifted measure e^{-r^2/4}.
    """
    if u.mode_k != 0:
        raise PreconditionViolation("log-Sobolev check takes radial (k=0) functions")
    v, q = _normalize_to_measure(u, m, weight)
    constant = 1.0 / WeightSystem(m).exponent(weight)
    t = v.values * v.values
    lhs = float(np.sum(xlogy(t, t) * q))
    rhs = constant * weighted_energy(v, m, weight)
    return InequalityReport.build(
        name,
        lhs,
        rhs,
        constant_used=constant,
        test_function=test_function,
        normalization=NORMALIZATION,
    )


def poincare_constant(m: int) -> float:
    return 2.0 * (m - 2) / m


def check_poincare(
    u: WeightedFunction,
    m: int,
    variant: str,
    *,
    name: str = "",
    test_function: str = "",
) -> InequalityReport:
    """
    int u^2 dV_g <= (2(m-2)/m) int |grad u|_g^2 dV_g, where the right side is the
    e^{-r^2/4} energy. mean_centered subtracts the dV_g mean of a radial u first.
    """
    if variant not in ("literal", "mean_centered"):
        raise InvalidArgument(f"variant must be 'literal' or 'mean_centered' (got {variant!r})")

    values = u.values
    if variant == "literal":
        peak = float(np.max(np.abs(values)))
        if peak > 0 and abs(values[-1]) > LITERAL_BOUNDARY_RTOL * peak:
            raise PreconditionViolation(
                f"literal Poincare needs u to vanish at r_max (|u|={abs(values[-1]):.3e}, sup={peak:.3e})"
            )
    elif u.mode_k == 0:
        q = quadrature_weights(u.grid, m, "dVg", 0)
        values = values - float(np.sum(values * q) / np.sum(q))

    v = WeightedFunction(u.grid, values, u.mode_k)
    constant = poincare_constant(m)
    return InequalityReport.build(
        name or f"poincare_{variant}",
        weighted_inner_product(v, v, "dVg", m=m),
        constant * weighted_energy(v, m),
        constant_used=constant,
        test_function=test_function,
        normalization="mean removed" if variant == "mean_centered" and u.mode_k == 0 else "",
    )


# ---------------- Uniform integrability ----------------

@dataclass(frozen=True)
class UniformIntegrabilityReport:
    sup_q: float
    q_values: Tuple[float, ...]
    thresholds: Tuple[float, ...]
    radii: Tuple[float, ...]
    eps: Tuple[float, ...]
    monotone: bool
    normalization: str = NORMALIZATION

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sup_q": self.sup_q,
            "q_values": list(self.q_values),
            "thresholds": list(self.thresholds),
            "radii": list(self.radii),
            "eps": list(self.eps),
            "monotone": self.monotone,
            "normalization": self.normalization,
        }


def _outer_fraction(grid: RadialGrid, radius: float) -> np.ndarray:
    """Share of each cell lying beyond `radius`."""
    return np.clip((grid.faces[1:] - radius) / grid.dr, 0.0, 1.0)


def check_uniform_integrability(
    family: Sequence[WeightedFunction],
    m: int,
    thresholds: Sequence[float],
) -> UniformIntegrabilityReport:
    """
    sup over the family of int Q(u^2) dmu with Q(t) = t log t, and for each delta the worst
    tail int_{r > R(delta)} u^2 dmu where mu({r > R(delta)}) = delta.
    """
    if not family:
        raise PreconditionViolation("uniform integrability needs a nonempty family")

    normalized: List[Tuple[np.ndarray, np.ndarray]] = []
    q_values: List[float] = []
    for u in family:
        q = quadrature_weights(u.grid, m, "dVg", u.mode_k)
        if not np.any(u.values):
            normalized.append((np.zeros_like(u.values), q))
            q_values.append(0.0)
            continue
        v, _ = _normalize_to_measure(u, m, "dVg")
        t = v.values * v.values
        normalized.append((t, q))
        q_values.append(float(np.sum(xlogy(t, t) * q)))

    radii: List[float] = []
    eps: List[float] = []
    for delta in thresholds:
        radius = radius_for_tail_measure(float(delta), m)
        radii.append(radius)
        worst = 0.0
        for u, (t, q) in zip(family, normalized):
            worst = max(worst, float(np.sum(t * q * _outer_fraction(u.grid, radius))))
        eps.append(worst)

    order = np.argsort(thresholds, kind="stable")
    sorted_eps = np.asarray(eps)[order]
    return UniformIntegrabilityReport(
        sup_q=max(q_values),
        q_values=tuple(q_values),
        thresholds=tuple(float(d) for d in thresholds),
        radii=tuple(radii),
        eps=tuple(eps),
        monotone=bool(np.all(np.diff(sorted_eps) >= 0)),
    )


# ---------------- Tail fits ----------------

@dataclass(frozen=True)
class TailFit:
    c0: float
    c1: float
    residual: float
    window: Tuple[float, float]
    n_samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "c0": self.c0,
            "c1": self.c1,
            "residual": self.residual,
            "window": list(self.window),
            "n_samples": self.n_samples,
        }


def growing_branch(grid: RadialGrid, m: int, r_lo: float) -> np.ndarray:
    """G(r) = int_{r_lo}^r s^{1-m} e^{s^2/4} ds at the cell centers (trapezoid on the centers)."""
    if not 0 < r_lo <= grid.r_max:
        raise InvalidArgument(f"r_lo must lie in (0, r_max] (got {r_lo})")
    nodes = np.union1d(grid.centers, [r_lo])
    integrand = np.exp((1 - m) * np.log(nodes) + 0.25 * nodes * nodes)
    cumulative = cumulative_trapezoid(integrand, nodes, initial=0.0)
    cumulative -= cumulative[np.searchsorted(nodes, r_lo)]
    return cumulative[np.searchsorted(nodes, grid.centers)]


def fit_tail(f: WeightedFunction, m: int, window: Tuple[float, float]) -> TailFit:
    """Least squares f ~ c0 + c1 G(r) on the window: finite-limit branch plus growing branch."""
    r_lo, r_hi = float(window[0]), float(window[1])
    grid = f.grid
    if not 0 < r_lo < r_hi <= grid.r_max:
        raise PreconditionViolation(f"window {window} is not inside (0, {grid.r_max}]")
    mask = (grid.centers >= r_lo) & (grid.centers <= r_hi)
    n_samples = int(mask.sum())
    if n_samples < MIN_FIT_SAMPLES:
        raise PreconditionViolation(f"window holds {n_samples} samples (need {MIN_FIT_SAMPLES})")

    g = growing_branch(grid, m, r_lo)[mask]
    y = f.values[mask]
    scale = float(np.max(np.abs(g)))
    if scale == 0.0 or not np.isfinite(scale):
        raise DegenerateWindow(f"growing branch is numerically constant on {window}")
    design = np.column_stack([np.ones_like(g), g / scale])
    coef, _res, rank, _sv = np.linalg.lstsq(design, y, rcond=None)
    if rank < 2:
        raise DegenerateWindow(f"growing branch is numerically constant on {window}")

    y_norm = float(np.linalg.norm(y))
    residual = float(np.linalg.norm(y - design @ coef)) / y_norm if y_norm > 0 else 0.0
    return TailFit(
        c0=float(coef[0]),
        c1=float(coef[1] / scale),
        residual=residual,
        window=(r_lo, r_hi),
        n_samples=n_samples,
    )


# ---------------- Mode decay ----------------

@dataclass(frozen=True)
class ModeDecay:
    k: int
    label: str
    probe_values: Tuple[float, ...]
    classification: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "label": self.label,
            "probe_values": list(self.probe_values),
            "classification": self.classification,
        }


@dataclass(frozen=True)
class ModeDecayReport:
    probes: Tuple[float, ...]
    modes: Tuple[ModeDecay, ...]

    def counts(self) -> Dict[str, int]:
        out = {"vanishes": 0, "grows": 0, "indeterminate": 0}
        for entry in self.modes:
            out[entry.classification] += 1
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "probes": list(self.probes),
            "modes": [entry.to_dict() for entry in self.modes],
            "counts": self.counts(),
        }


def classify_decay(values: np.ndarray, probe_values: np.ndarray, vanish_tol: float, grow_factor: float) -> str:
    sup = float(np.max(np.abs(values))) if values.size else 0.0
    last = abs(float(probe_values[-1]))
    if sup == 0.0 or last <= vanish_tol * sup:
        return "vanishes"
    if last > grow_factor * abs(float(probe_values[0])):
        return "grows"
    return "indeterminate"


def check_mode_decay(
    u_modes: Sequence[WeightedFunction],
    probes: Sequence[float],
    *,
    labels: Optional[Sequence[str]] = None,
    vanish_tol: float = VANISH_TOL,
    grow_factor: float = GROW_FACTOR,
) -> ModeDecayReport:
    """Classify each k >= 1 trace along increasing probe radii."""
    probes_arr = np.asarray(probes, dtype=float)
    if probes_arr.size < 2 or np.any(np.diff(probes_arr) <= 0):
        raise InvalidArgument("probes must be at least two increasing radii")
    if not any(u.mode_k >= 1 for u in u_modes):
        raise PreconditionViolation("mode decay needs at least one k >= 1 trace")

    entries: List[ModeDecay] = []
    for i, u in enumerate(u_modes):
        if u.mode_k < 1:
            continue
        sampled = np.interp(probes_arr, u.grid.centers, u.values)
        entries.append(
            ModeDecay(
                k=u.mode_k,
                label=labels[i] if labels else f"trace_{i}",
                probe_values=tuple(float(v) for v in sampled),
                classification=classify_decay(u.values, sampled, vanish_tol, grow_factor),
            )
        )
    return ModeDecayReport(probes=tuple(float(p) for p in probes_arr), modes=tuple(entries))


# ---------------- Maximum principle ----------------

@dataclass(frozen=True)
class ExtremumReport:
    inspected: int
    violations: Tuple[Tuple[float, str, float], ...] = field(default_factory=tuple)

    @property
    def clean(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "inspected": self.inspected,
            "violations": [{"r": r, "kind": kind, "value": v} for r, kind, v in self.violations],
            "clean": self.clean,
        }


def mode_potential(problem: ModeProblem, lam: float) -> np.ndarray:
    """-lambda * density(r) + lambda_k / r^2 at the cell centers."""
    r = problem.grid.centers
    density = WeightSystem(problem.m).spectral_density(problem.operator)(r)
    return -lam * density + problem.lambda_k / (r * r)


def check_no_interior_extremum(
    f: WeightedFunction,
    potential: np.ndarray,
    window: Optional[Tuple[float, float]] = None,
) -> ExtremumReport:
    """Interior positive maxima / negative minima of f where the potential is positive."""
    potential = np.asarray(potential, dtype=float)
    if potential.shape != f.values.shape:
        raise InvalidArgument("potential must be sampled at the cell centers")

    r = f.grid.centers
    if window is not None:
        mask = (r >= window[0]) & (r <= window[1])
        if not np.all(potential[mask] > 0):
            raise PreconditionViolation(f"potential is not positive throughout {window}")
    else:
        mask = potential > 0
    if not mask.any():
        raise PreconditionViolation("no range with positive potential")

    v = f.values
    inner = mask[1:-1] & mask[:-2] & mask[2:]
    mid, left, right = v[1:-1], v[:-2], v[2:]
    is_max = inner & (mid > 0) & (mid > left) & (mid >= right)
    is_min = inner & (mid < 0) & (mid < left) & (mid <= right)

    violations: List[Tuple[float, str, float]] = []
    for i in np.flatnonzero(is_max | is_min):
        violations.append((float(r[i + 1]), "max" if is_max[i] else "min", float(mid[i])))
    return ExtremumReport(inspected=int(mask.sum()), violations=tuple(violations))


# ---------------- Asymptotic identities ----------------

def check_tail_ratio(r: float, m: int, band: float) -> InequalityReport:
    """| r^3 R(r) - 2 | within band."""
    scaled = r**3 * tail_ratio(r, m)
    return InequalityReport.build(
        f"tail_ratio_m{m}_r{r:g}",
        abs(scaled - TAIL_LIMIT),
        band,
        constant_used=TAIL_LIMIT,
        test_function=f"r^3*R(r)={scaled!r}",
    )


def check_comparison_function(r: float, m: int) -> InequalityReport:
    exact = comparison_function_exact(r, m)
    computed = comparison_function_residual(r, m)
    return InequalityReport.build(
        f"comparison_m{m}_r{r:g}",
        abs(computed - exact) / abs(exact),
        COMPARISON_RTOL,
        constant_used=exact,
        test_function=f"L(e^(2r^2))/e^(2r^2)={computed!r}",
    )


# ---------------- Random test family ----------------

def random_test_family(grid: RadialGrid, size: int, rng: np.random.Generator) -> List[Tuple[str, WeightedFunction]]:
    """(1 + c1 r + c2 r^2) e^{-a r^2} with c1, c2 ~ U[-1/2, 1/2], a ~ U[1, 2]."""
    r = grid.centers
    family: List[Tuple[str, WeightedFunction]] = []
    for _ in range(size):
        c1, c2 = rng.uniform(-0.5, 0.5, size=2)
        a = rng.uniform(1.0, 2.0)
        values = (1.0 + c1 * r + c2 * r * r) * np.exp(-a * r * r)
        label = f"poly_gauss[c1={c1:.6g},c2={c2:.6g},a={a:.6g}]"
        family.append((label, WeightedFunction(grid, values, 0)))
    return family
