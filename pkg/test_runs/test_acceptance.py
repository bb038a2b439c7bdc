"""End-to-end acceptance checks against closed-form spectra and the stated inequalities."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from typer.testing import CliRunner

from quasi_spectral.analysis import (
    check_comparison_function,
    check_log_sobolev,
    random_test_family,
)
from quasi_spectral.cli import app
from quasi_spectral.measure import WeightedFunction, build_grid, tail_ratio
from quasi_spectral.modes import assemble_full_spectrum, build_mode_problem, sphere_multiplicity
from quasi_spectral.oracles import comparison_function_exact, comparison_function_residual, manufactured_rhs
from quasi_spectral.radial_solver import (
    ZERO_FLOOR,
    assemble,
    count_below,
    eigenvalues_only,
    manufactured_problem_error,
    refine_and_estimate_order,
    solve_poisson,
    solve_poisson_reference,
)

pytestmark = pytest.mark.acceptance


# drifted spectrum reproduces (k + 2n)/2
@pytest.mark.parametrize("m", [3, 4, 5])
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_drifted_spectrum_oracle(solve_mode, m, k):
    result = solve_mode("drifted", m, k, 4)
    expected = [(k + 2 * n) / 2 for n in range(4)]
    np.testing.assert_allclose(result.eigenvalues, expected, rtol=0, atol=1e-3)


def test_drifted_refinement_order(default_grid):
    report = refine_and_estimate_order(build_mode_problem("drifted", 3, 1, default_grid), 0, [300, 600, 1200, 2400])
    assert 1.8 <= report.order <= 2.2
    assert abs(report.limit - 0.5) <= 1e-4


def test_drifted_radial_refinement_limit(default_grid):
    # k=0 converges faster than second order
    report = refine_and_estimate_order(build_mode_problem("drifted", 3, 0, default_grid), 1, [300, 600, 1200, 2400])
    assert report.order >= 1.8
    assert abs(report.limit - 1.0) <= 1e-4


# drifted gap is 1/2
def test_drifted_gap(solve_mode):
    values = np.concatenate([solve_mode("drifted", 3, k, 4).eigenvalues for k in range(4)])
    nonzero = values[values > 1e-10]
    assert np.min(nonzero) == pytest.approx(0.5, abs=1e-3)
    assert not np.any((values > 1e-10) & (values < 0.5 - 1e-3))


# quasi Dirichlet gap above the truncation ground state
@pytest.mark.parametrize("m, bound", [(3, 1.45), (4, 0.95)])
def test_quasi_gap(default_grid, m, bound):
    lowest = []
    for k in range(9):
        values = eigenvalues_only(assemble(build_mode_problem("quasi", m, k, default_grid)), 2)
        lowest.append(float(values[values >= ZERO_FLOOR][0]))
    assert min(lowest) >= bound


# r^3 R(r) tends to 2
@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_tail_asymptotic(m):
    assert 1.9 <= 10.0**3 * tail_ratio(10.0, m) <= 2.1
    # m = 6 sits exactly on the upper edge at r = 20
    assert 1.98 - 1e-12 <= 20.0**3 * tail_ratio(20.0, m) <= 2.02 + 1e-12


# L e^{2r^2} = e^{2r^2} (14 r^2 + 4m)
@pytest.mark.parametrize("m", [3, 4])
@pytest.mark.parametrize("r", [1.0, 2.0, 4.0, 8.0])
def test_comparison_function_identity(m, r):
    exact = comparison_function_exact(r, m)
    assert abs(comparison_function_residual(r, m) - exact) <= 1e-6 * exact
    assert check_comparison_function(r, m).passed


# log-Sobolev on a seeded random family
@pytest.mark.parametrize("m", [3, 4, 5])
def test_log_sobolev_battery(default_grid, m):
    family = random_test_family(default_grid, 50, np.random.default_rng(m))
    reports = [check_log_sobolev(u, m, test_function=label) for label, u in family]
    failed = [r.test_function for r in reports if not r.passed]
    assert not failed
    assert reports[0].constant_used == pytest.approx(4.0 * (m - 2) / m)


# multiplicities of the drifted spectrum
def test_drifted_multiplicities(solve_mode):
    per_mode = [(k, solve_mode("drifted", 3, k, 4).eigenvalues) for k in range(7)]
    entries = assemble_full_spectrum(per_mode, 3, tol=1e-3)
    for n in range(7):
        (entry,) = [e for e in entries if abs(e.eigenvalue - n / 2) <= 1e-2]
        assert entry.multiplicity == math.comb(n + 2, 2)


def test_multiplicity_identity():
    for m in range(3, 7):
        for n in range(11):
            total = sum(sphere_multiplicity(m, k) for k in range(n % 2, n + 1, 2))
            assert total == math.comb(n + m - 1, m - 1)


# manufactured Poisson solution
def test_poisson_manufactured(default_grid):
    problem = build_mode_problem("quasi", 3, 0, default_grid)
    _, error = manufactured_problem_error(problem)
    assert error <= 1e-3


def test_poisson_order_and_solver_paths():
    # sparse LU loses the near-null direction on r_max = 12; paths are compared on r_max = 6
    problem = build_mode_problem("quasi", 3, 0, build_grid(6.0, 1200))
    f = WeightedFunction(problem.grid, manufactured_rhs(problem.grid.centers, 3))
    u = solve_poisson(problem, f)
    reference = solve_poisson_reference(problem, f)
    np.testing.assert_array_equal(solve_poisson(problem, f).values, u.values)
    assert np.max(np.abs(u.values - reference.values)) <= 1e-8 * np.max(np.abs(u.values))

    report = refine_and_estimate_order(problem, "poisson", [150, 300, 600, 1200])
    assert 1.8 <= report.order <= 2.2


# eigenvalue counts below 10 do not depend on resolution or truncation
def _count_below(m: int, r_max: float, n_cells: int, level: float) -> int:
    grid = build_grid(r_max, n_cells)
    total = 0
    for k in range(65):
        found = count_below(assemble(build_mode_problem("quasi", m, k, grid)), level)
        if found == 0:
            break
        total += found * sphere_multiplicity(m, k)
    return total


def test_counts_are_stable():
    counts = {
        (r_max, n_cells): _count_below(3, r_max, n_cells, 10.0)
        for r_max in (10.0, 12.0, 14.0)
        for n_cells in (1200, 2400, 4800)
    }
    assert len(set(counts.values())) == 1, counts
    assert next(iter(counts.values())) > 0


# identical payloads on rerun
@pytest.mark.parametrize("command", ["spectrum", "verify"])
def test_payloads_are_deterministic(write_config, tmp_path, command):
    cfg = write_config(operator="quasi", m=3, modes=[0, 2], pairs_per_mode=2, n_cells=1200, seed=7, family_size=5)
    payloads = []
    for run in ("a", "b"):
        out = tmp_path / run
        result = CliRunner().invoke(app, [command, "-c", str(cfg), "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / f"{command}.json").read_text(encoding="utf-8"))
        payloads.append(json.dumps(report["payload"], sort_keys=True))
    assert payloads[0] == payloads[1]
