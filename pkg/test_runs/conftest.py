from __future__ import annotations

from pathlib import Path
from typing import Any, Callable, Dict

import numpy as np
import pytest
import yaml

from quasi_spectral.measure import RadialGrid, build_grid
from quasi_spectral.modes import build_mode_problem
from quasi_spectral.radial_solver import SpectralResult, assemble, solve_eigen

DEFAULT_R_MAX = 12.0
DEFAULT_CELLS = 2400


@pytest.fixture(scope="session")
def default_grid() -> RadialGrid:
    return build_grid(DEFAULT_R_MAX, DEFAULT_CELLS)


@pytest.fixture(scope="session")
def solve_mode(default_grid: RadialGrid) -> Callable[..., SpectralResult]:
    """Memoized eigen solve on the default grid, keyed by (operator, m, k, count, bc_outer)."""
    cache: Dict[tuple, SpectralResult] = {}

    def _solve(operator: str, m: int, k: int, count: int, bc_outer: str | None = None) -> SpectralResult:
        key = (operator, m, k, count, bc_outer)
        if key not in cache:
            problem = build_mode_problem(operator, m, k, default_grid, bc_outer)
            cache[key] = solve_eigen(assemble(problem), count, rng=np.random.default_rng([0, k]))
        return cache[key]

    return _solve


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[..., Path]:
    """Write a YAML RunConfig into tmp_path; output_dir defaults to tmp_path/results."""

    def _write(name: str = "config.yaml", **fields: Any) -> Path:
        fields.setdefault("output_dir", str(tmp_path / "results"))
        path = tmp_path / name
        path.write_text(yaml.safe_dump(fields, sort_keys=False), encoding="utf-8")
        return path

    return _write
