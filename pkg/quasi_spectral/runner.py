from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional
from uuid import uuid4

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import (
    ConfigError,
    DegenerateWindow,
    IllPosedRequest,
    IncompatibleOperands,
    InvalidArgument,
    NumericalFailure,
    PreconditionViolation,
    ReportIOError,
    UnsupportedDimension,
)
from .io_utils import ensure_output_dir
from .measure import build_grid
from .modes import build_mode_problem
from .radial_solver import SpectralResult, assemble, solve_eigen

ARTIFACT_VERSION = f"quasi-spectral/{__version__}"
OUTPUT_DIR_ENV = "QUASI_SPECTRAL_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3
EXIT_NUMERICAL_FAILURE = 4
EXIT_INCONCLUSIVE = 5

OUTCOME_BY_EXIT = {
    EXIT_OK: "ok",
    EXIT_CHECK_FAILED: "failed",
    EXIT_CONFIG_ERROR: "config_error",
    EXIT_IO_ERROR: "io_error",
    EXIT_NUMERICAL_FAILURE: "numerical_failure",
    EXIT_INCONCLUSIVE: "inconclusive",
}


def utc_timestamp_now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


def generate_execution_id(command: str) -> str:
    """<command>-<UTC stamp>-<8 hex>, unique per invocation."""
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    return f"{command}-{stamp}-{uuid4().hex[:8]}"


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(path: Path, obj: Dict[str, Any]) -> None:
    ensure_output_dir(path.parent)
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    except OSError as e:
        raise ReportIOError(f"cannot write JSON ({e.strerror})", path=path) from e


def read_json(path: Path) -> Dict[str, Any]:
    return json.loads(path.read_text(encoding="utf-8"))


# ---------------- Output location ----------------

def resolve_output_dir(flag: Optional[Path], config: RunConfig) -> Path:
    if flag is not None:
        return flag
    env_dir = (os.environ.get(OUTPUT_DIR_ENV) or "").strip()
    if env_dir:
        return Path(env_dir)
    return Path(config.output_dir)


# ---------------- Reports ----------------

def build_report(config: RunConfig, command: str, payload: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "artifact_version": ARTIFACT_VERSION,
        "command": command,
        "timestamp": utc_timestamp_now(),
        "config": config.to_dict(),
        "payload": payload,
    }


def write_command_status_json(
    *,
    out_dir: Path,
    command: str,
    rid: str,
    outcome: str,  # "started" | "ok" | "failed" | "config_error" | "io_error" | "numerical_failure" | "inconclusive"
    reason: str = "",
    returncode: Optional[int] = None,
    artifacts: Optional[Dict[str, str]] = None,
    duration_sec: Optional[float] = None,
) -> None:
    payload: Dict[str, Any] = {
        "ts_utc": utc_timestamp_now(),
        "run_id": rid,
        "phase": command,
        "outcome": outcome,
        "reason": reason,
        "returncode": returncode,
        "duration_sec": duration_sec,
        "artifacts": artifacts or {},
    }
    write_json(out_dir / f"status_{command}.json", payload)


# ---------------- Command execution ----------------

@dataclass
class CommandResult:
    returncode: int = EXIT_OK
    artifacts: Dict[str, str] = field(default_factory=dict)
    reason: str = ""


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ReportIOError):
        return EXIT_IO_ERROR
    if isinstance(exc, NumericalFailure):
        return EXIT_NUMERICAL_FAILURE
    if isinstance(
        exc,
        (
            ConfigError,
            InvalidArgument,
            IncompatibleOperands,
            UnsupportedDimension,
            PreconditionViolation,
            IllPosedRequest,
            DegenerateWindow,
        ),
    ):
        return EXIT_CONFIG_ERROR
    if isinstance(exc, OSError):
        return EXIT_IO_ERROR
    raise exc


def execute_command(
    command: str,
    out_dir: Path,
    body: Callable[[Path], CommandResult],
) -> int:
    """
    Run one command body against out_dir, recording status_<command>.json before and after.

    Domain errors become exit codes; anything else propagates.
    """
    rid = generate_execution_id(command)
    t0 = time.time()

    try:
        ensure_output_dir(out_dir)
        write_command_status_json(out_dir=out_dir, command=command, rid=rid, outcome="started")
    except ReportIOError as e:
        print(f"ERROR: {e}")
        return EXIT_IO_ERROR

    try:
        result = body(out_dir)
    except Exception as e:  # noqa: BLE001
        code = exit_code_for(e)
        print(f"ERROR: [{command}] {e}")
        result = CommandResult(returncode=code, reason=str(e))

    duration = round(time.time() - t0, 3)
    try:
        write_command_status_json(
            out_dir=out_dir,
            command=command,
            rid=rid,
            outcome=OUTCOME_BY_EXIT.get(result.returncode, "failed"),
            reason=result.reason,
            returncode=result.returncode,
            artifacts=result.artifacts,
            duration_sec=duration,
        )
    except ReportIOError as e:
        print(f"ERROR: {e}")
        return EXIT_IO_ERROR

    print(f"[{command}] done rc={result.returncode} in {duration}s")
    return result.returncode


# ---------------- Mode sweeps ----------------

def sweep_modes(
    config: RunConfig,
    *,
    tag: str,
    count: Optional[int] = None,
    k_values: Optional[List[int]] = None,
) -> List[SpectralResult]:
    """Solve every configured mode in k order with one seeded generator per mode."""
    grid = build_grid(config.r_max, config.n_cells)
    results: List[SpectralResult] = []
    for k in k_values if k_values is not None else config.k_values:
        problem = build_mode_problem(config.operator, config.m, k, grid, config.bc_outer)
        rng = np.random.default_rng([config.seed, k])
        result = solve_eigen(assemble(problem), count or config.pairs_per_mode, rng=rng)
        print(f"[{tag}] k={k} lambda_0={result.eigenvalues[0]!r} max_residual={float(result.residuals.max()):.2e}")
        results.append(result)
    return results
