from __future__ import annotations

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, TypeVar, Union

import numpy as np
import pandas as pd
import typer

from .analysis import (
    InequalityReport,
    check_comparison_function,
    check_log_sobolev,
    check_mode_decay,
    check_no_interior_extremum,
    check_poincare,
    check_tail_ratio,
    check_uniform_integrability,
    fit_tail,
    mode_potential,
    random_test_family,
)
from .config import RunConfig
from .errors import (
    ConfigError,
    DegenerateWindow,
    NumericalFailure,
    PreconditionViolation,
)
from .io_utils import read_samples, write_columns_dat, write_dataframe_csv
from .measure import WeightedFunction, build_grid, truncation_bound
from .modes import assemble_full_spectrum, build_mode_problem, sphere_multiplicity
from .oracles import manufactured_rhs, manufactured_solution
from .radial_solver import (
    SpectralResult,
    assemble,
    eigenvalues_only,
    poisson_residual,
    refine_and_estimate_order,
    relative_l2_error,
    rmax_sensitivity,
    solve_poisson,
    solve_poisson_reference,
    split_ground_state,
)
from .runner import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_INCONCLUSIVE,
    EXIT_NUMERICAL_FAILURE,
    EXIT_OK,
    CommandResult,
    build_report,
    execute_command,
    resolve_output_dir,
    sweep_modes,
    write_json,
)

app = typer.Typer(add_completion=False, no_args_is_help=True)

ORDER_BAND = (1.8, 2.2)
POISSON_RTOL = 1e-3
TAIL_BANDS = {10.0: 0.1, 20.0: 0.02}
TAIL_DIMENSIONS = (3, 4, 5, 6)
COMPARISON_RADII = (1.0, 2.0, 4.0, 8.0)
UI_THRESHOLDS = (1e-1, 1e-2, 1e-3, 1e-4)
DECAY_PROBES = 8

T = TypeVar("T")


def load_run_config(config_file_path: Path) -> RunConfig:
    try:
        return RunConfig.load(config_file_path)
    except ConfigError as e:
        print(f"ERROR: {e}")
        raise SystemExit(EXIT_CONFIG_ERROR)


# ---------------- spectrum ----------------

def spectrum_rows(results: List[SpectralResult]) -> pd.DataFrame:
    rows: List[Dict[str, Any]] = []
    for result in results:
        k = result.problem.k
        mult = sphere_multiplicity(result.problem.m, k)
        for n, (lam, res) in enumerate(zip(result.eigenvalues, result.residuals)):
            rows.append({"k": k, "n": n, "lambda": float(lam), "multiplicity": mult, "residual": float(res)})
    df = pd.DataFrame(rows, columns=["k", "n", "lambda", "multiplicity", "residual"])
    return df.sort_values(["lambda", "k", "n"], kind="mergesort").reset_index(drop=True)


def run_spectrum(config: RunConfig, out_dir: Path) -> CommandResult:
    results = sweep_modes(config, tag="spectrum")

    csv_path = out_dir / "spectrum.csv"
    write_dataframe_csv(csv_path, spectrum_rows(results))
    print(f"[spectrum] wrote {csv_path}")

    merged = assemble_full_spectrum(
        [(r.problem.k, r.eigenvalues) for r in results],
        config.m,
        config.merge_tol,
    )
    all_values = sorted(float(v) for r in results for v in r.eigenvalues)
    ground, rest = split_ground_state(all_values)
    gaps = [b.eigenvalue - a.eigenvalue for a, b in zip(merged, merged[1:])]
    # lambda_0 grows with k, so nothing from omitted modes lies below the top mode's lambda_0
    complete_below: Optional[float] = None
    if config.modes[0] == 0:
        complete_below = min([float(results[-1].eigenvalues[0])] + [float(r.eigenvalues[-1]) for r in results])

    payload = {
        "spectrum": [entry.to_dict() for entry in merged],
        "per_mode": [
            {
                "k": r.problem.k,
                "multiplicity": sphere_multiplicity(config.m, r.problem.k),
                "eigenvalues": [float(v) for v in r.eigenvalues],
                "residuals": [float(v) for v in r.residuals],
            }
            for r in results
        ],
        "ground_state": ground,
        "spectral_gap": rest[0] if rest else None,
        "min_gap": min(gaps) if gaps else None,
        "complete_below": complete_below,
        "truncation_bound": truncation_bound(config.r_max, config.m),
        "rmax_sensitivity": rmax_sensitivity(results[0].problem, config.pairs_per_mode).to_dict(),
    }
    json_path = out_dir / "spectrum.json"
    write_json(json_path, build_report(config, "spectrum", payload))
    print(f"[spectrum] wrote {json_path}")

    return CommandResult(EXIT_OK, {"csv": str(csv_path), "json": str(json_path)})


# ---------------- eigenfunction ----------------

def run_eigenfunction(config: RunConfig, out_dir: Path, k: int, n: int) -> CommandResult:
    if k not in config.k_values or not 0 <= n < config.pairs_per_mode:
        raise ConfigError(
            f"(k={k}, n={n}) outside the computed range k in [{config.modes[0]}, {config.modes[1]}], "
            f"n in [0, {config.pairs_per_mode - 1}]"
        )

    result = sweep_modes(config, tag="eigenfunction", count=n + 1, k_values=[k])[0]
    f = result.eigenfunctions[n]
    dat_path = out_dir / f"eig_k{k}_n{n}.dat"
    write_columns_dat(dat_path, {"r": f.grid.centers, "f": f.values})
    print(f"[eigenfunction] wrote {dat_path} (lambda={float(result.eigenvalues[n])!r})")
    return CommandResult(EXIT_OK, {"dat": str(dat_path)})


# ---------------- verify ----------------

def _guarded(
    name: str,
    errors: List[Dict[str, str]],
    fn: Callable[[], T],
) -> Optional[T]:
    try:
        return fn()
    except NumericalFailure as e:
        print(f"ERROR: [verify] {name}: {e}")
        errors.append({"check": name, "error": str(e)})
        return None


def _eigen_diagnostics(config: RunConfig, results: List[SpectralResult]) -> Dict[str, Any]:
    diagnostics: Dict[str, Any] = {}

    traces = [(f"k{r.problem.k}_n{n}", f) for r in results for n, f in enumerate(r.eigenfunctions)]
    if any(f.mode_k >= 1 for _, f in traces):
        probes = np.linspace(1.0, 0.9 * config.r_max, DECAY_PROBES)
        decay = check_mode_decay([f for _, f in traces], probes, labels=[label for label, _ in traces])
        diagnostics["mode_decay"] = decay.to_dict()
    else:
        diagnostics["mode_decay"] = {"skipped": "no k >= 1 eigenfunction"}

    # eigenfunctions sit near equality, so these are reported ratios rather than checks
    diagnostics["eigenfunction_poincare"] = [
        check_poincare(
            f,
            config.m,
            "mean_centered",
            name=f"poincare_eigenfunction_k{r.problem.k}_n{n}",
            test_function=f"{r.problem.label} n={n} lambda={float(r.eigenvalues[n])!r}",
        ).to_dict()
        for r in results
        for n, f in enumerate(r.eigenfunctions)
    ]

    window = (2.0 * config.r_max / 3.0, config.r_max)
    fits: Dict[str, Any] = {}
    extrema: Dict[str, Any] = {}
    for r in results:
        for n, f in enumerate(r.eigenfunctions):
            label = f"k{r.problem.k}_n{n}"
            try:
                fits[label] = fit_tail(f, config.m, window).to_dict()
            except (DegenerateWindow, PreconditionViolation) as e:
                fits[label] = {"skipped": str(e)}
            try:
                potential = mode_potential(r.problem, float(r.eigenvalues[n]))
                extrema[label] = check_no_interior_extremum(f, potential).to_dict()
            except PreconditionViolation as e:
                extrema[label] = {"skipped": str(e)}
    diagnostics["tail_fits"] = fits
    diagnostics["interior_extrema"] = extrema
    return diagnostics


def run_verify(config: RunConfig, out_dir: Path) -> CommandResult:
    grid = build_grid(config.r_max, config.n_cells)
    family = random_test_family(grid, config.family_size, np.random.default_rng(config.seed))
    checks: List[InequalityReport] = []
    errors: List[Dict[str, str]] = []

    for i, (label, u) in enumerate(family):
        checks.append(check_log_sobolev(u, config.m, name=f"log_sobolev_{i:03d}", test_function=label))
    if config.operator == "drifted":
        for i, (label, u) in enumerate(family):
            checks.append(
                check_log_sobolev(
                    u, config.m, weight="gauss_quarter", name=f"log_sobolev_drifted_{i:03d}", test_function=label
                )
            )
    for i, (label, u) in enumerate(family):
        checks.append(check_poincare(u, config.m, "mean_centered", name=f"poincare_mean_centered_{i:03d}", test_function=label))
    literal_skipped: List[str] = []
    for i, (label, u) in enumerate(family):
        try:
            checks.append(check_poincare(u, config.m, "literal", name=f"poincare_literal_{i:03d}", test_function=label))
        except PreconditionViolation:
            literal_skipped.append(label)
    print(f"[verify] random family: {len(checks)} checks")

    k_values = config.k_values[:2]
    results = _guarded(
        "eigenfunctions",
        errors,
        lambda: sweep_modes(config, tag="verify", count=min(2, config.pairs_per_mode), k_values=k_values),
    ) or []
    for m in TAIL_DIMENSIONS:
        for radius, band in TAIL_BANDS.items():
            checks.append(check_tail_ratio(radius, m, band))
    for m in sorted({3, 4, config.m}):
        for radius in COMPARISON_RADII:
            checks.append(check_comparison_function(radius, m))

    diagnostics: Dict[str, Any] = {
        "uniform_integrability": check_uniform_integrability(
            [u for _, u in family], config.m, UI_THRESHOLDS
        ).to_dict(),
        "literal_poincare_skipped": literal_skipped,
    }
    if results:
        diagnostics.update(_eigen_diagnostics(config, results))

    passed = sum(1 for c in checks if c.passed)
    payload = {
        "checks": [c.to_dict() for c in checks],
        "diagnostics": diagnostics,
        "errors": errors,
        "passed": passed,
        "total": len(checks),
    }
    json_path = out_dir / "verify.json"
    write_json(json_path, build_report(config, "verify", payload))
    print(f"[verify] {passed}/{len(checks)} checks passed; wrote {json_path}")

    if errors:
        return CommandResult(EXIT_NUMERICAL_FAILURE, {"json": str(json_path)}, "; ".join(e["check"] for e in errors))
    if passed < len(checks):
        failed = [c.name for c in checks if not c.passed]
        return CommandResult(EXIT_CHECK_FAILED, {"json": str(json_path)}, f"failed: {', '.join(failed[:10])}")
    return CommandResult(EXIT_OK, {"json": str(json_path)})


# ---------------- poisson ----------------

def run_poisson(config: RunConfig, out_dir: Path, rhs: str, rhs_file: Optional[Path], k: int) -> CommandResult:
    if config.operator != "quasi" or config.bc_outer != "dirichlet":
        raise ConfigError("poisson needs operator=quasi and bc_outer=dirichlet")
    if rhs not in ("manufactured", "file"):
        raise ConfigError(f"--rhs must be 'manufactured' or 'file' (got {rhs!r})")
    if rhs == "manufactured" and k != 0:
        raise ConfigError("the manufactured right-hand side is radial; use --k 0")

    grid = build_grid(config.r_max, config.n_cells)
    problem = build_mode_problem("quasi", config.m, k, grid, "dirichlet")
    if rhs == "file":
        if rhs_file is None:
            raise ConfigError("--rhs file needs --rhs-file")
        f = WeightedFunction(grid, read_samples(rhs_file, grid.n_cells), k)
    else:
        f = WeightedFunction(grid, manufactured_rhs(grid.centers, config.m), k)

    u = solve_poisson(problem, f)
    reference = solve_poisson_reference(problem, f)
    scale = float(np.max(np.abs(u.values)))
    agreement = float(np.max(np.abs(u.values - reference.values))) / scale if scale > 0 else 0.0

    payload: Dict[str, Any] = {
        "rhs": rhs,
        "k": k,
        "residual": poisson_residual(problem, u, f),
        "path_agreement": agreement,
        "lowest_eigenvalue": float(eigenvalues_only(assemble(problem), 1)[0]),
    }
    rc = EXIT_OK
    reason = ""
    if rhs == "manufactured":
        exact = WeightedFunction(grid, manufactured_solution(grid.centers), k)
        error = relative_l2_error(u, exact, config.m)
        payload["relative_l2_error"] = error
        payload["tolerance"] = POISSON_RTOL
        if error > POISSON_RTOL:
            rc, reason = EXIT_CHECK_FAILED, f"relative error {error:.3e} above {POISSON_RTOL}"

    dat_path = out_dir / "poisson.dat"
    write_columns_dat(dat_path, {"r": grid.centers, "u": u.values})
    json_path = out_dir / "poisson.json"
    write_json(json_path, build_report(config, "poisson", payload))
    print(f"[poisson] residual={payload['residual']:.3e}; wrote {dat_path}")
    return CommandResult(rc, {"dat": str(dat_path), "json": str(json_path)}, reason)


# ---------------- converge ----------------

def parse_target(target: str) -> Union[int, str]:
    target = target.strip().lower()
    if target == "poisson":
        return target
    try:
        index = int(target)
    except ValueError:
        raise ConfigError(f"--target must be an eigenvalue index or 'poisson' (got {target!r})") from None
    if index < 0:
        raise ConfigError(f"--target index must be >= 0 (got {index})")
    return index


def _order_column(report_orders: Tuple[float, ...], levels: int, first: int) -> List[Optional[float]]:
    column: List[Optional[float]] = [None] * levels
    for i, p in enumerate(report_orders):
        column[first + i] = p
    return column


def run_converge(config: RunConfig, out_dir: Path, target: str, k: Optional[int]) -> CommandResult:
    quantity = parse_target(target)
    k = config.modes[0] if k is None else k
    if k not in config.k_values:
        raise ConfigError(f"--k {k} outside configured modes {list(config.modes)}")

    grid = build_grid(config.r_max, config.n_cells)
    problem = build_mode_problem(config.operator, config.m, k, grid, config.bc_outer)
    report = refine_and_estimate_order(problem, quantity, config.ladder)

    levels = len(report.ladder)
    df = pd.DataFrame(
        {
            "n_cells": list(report.ladder),
            "dr": list(report.dr),
            "value": list(report.values),
            "difference": [None] + list(report.differences),
            "order": _order_column(report.orders, levels, 1 if quantity == "poisson" else 2),
        }
    )
    csv_path = out_dir / "converge.csv"
    write_dataframe_csv(csv_path, df)
    json_path = out_dir / "converge.json"
    payload: Dict[str, Any] = {"k": k, **report.to_dict(), "band": list(ORDER_BAND)}
    # orders above the band pass; the drifted k=0 eigenvalues converge near fourth order
    payload["superconvergent"] = report.order_defined and report.order > ORDER_BAND[1]
    write_json(json_path, build_report(config, "converge", payload))
    print(f"[converge] {report.quantity}: order={report.order} limit={report.limit}; wrote {csv_path}")

    artifacts = {"csv": str(csv_path), "json": str(json_path)}
    if not report.order_defined:
        return CommandResult(EXIT_INCONCLUSIVE, artifacts, report.reason)
    if report.order < ORDER_BAND[0]:
        return CommandResult(EXIT_CHECK_FAILED, artifacts, f"order {report.order:.3f} below {ORDER_BAND[0]}")
    return CommandResult(EXIT_OK, artifacts)


# ---------------- Commands ----------------

ConfigOption = typer.Option(..., "-c", "--config", exists=True, dir_okay=False)
OutOption = typer.Option(None, "--out", help="Output directory (else $QUASI_SPECTRAL_OUTPUT_DIR, else output_dir).")


@app.command()
def spectrum(config: Path = ConfigOption, out: Optional[Path] = OutOption):
    cfg = load_run_config(config)
    raise SystemExit(execute_command("spectrum", resolve_output_dir(out, cfg), lambda d: run_spectrum(cfg, d)))


@app.command()
def eigenfunction(
    config: Path = ConfigOption,
    k: int = typer.Option(0, "--k"),
    n: int = typer.Option(0, "--n"),
    out: Optional[Path] = OutOption,
):
    cfg = load_run_config(config)
    raise SystemExit(
        execute_command("eigenfunction", resolve_output_dir(out, cfg), lambda d: run_eigenfunction(cfg, d, k, n))
    )


@app.command()
def verify(config: Path = ConfigOption, out: Optional[Path] = OutOption):
    cfg = load_run_config(config)
    raise SystemExit(execute_command("verify", resolve_output_dir(out, cfg), lambda d: run_verify(cfg, d)))


@app.command()
def poisson(
    config: Path = ConfigOption,
    rhs: str = typer.Option("manufactured", "--rhs", help="manufactured | file"),
    rhs_file: Optional[Path] = typer.Option(None, "--rhs-file", dir_okay=False),
    k: int = typer.Option(0, "--k"),
    out: Optional[Path] = OutOption,
):
    cfg = load_run_config(config)
    raise SystemExit(
        execute_command("poisson", resolve_output_dir(out, cfg), lambda d: run_poisson(cfg, d, rhs, rhs_file, k))
    )


@app.command()
def converge(
    config: Path = ConfigOption,
    target: str = typer.Option("1", "--target", help="eigenvalue index or 'poisson'"),
    k: Optional[int] = typer.Option(None, "--k"),
    out: Optional[Path] = OutOption,
):
    cfg = load_run_config(config)
    raise SystemExit(
        execute_command("converge", resolve_output_dir(out, cfg), lambda d: run_converge(cfg, d, target, k))
    )


if __name__ == "__main__":
    app()
