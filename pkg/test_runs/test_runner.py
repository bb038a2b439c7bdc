from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from quasi_spectral.config import RunConfig
from quasi_spectral.errors import (
    ConfigError,
    DegenerateWindow,
    IllPosedRequest,
    NumericalFailure,
    PreconditionViolation,
    ReportIOError,
    UnsupportedDimension,
)
from quasi_spectral.io_utils import read_samples, write_columns_dat
from quasi_spectral.runner import (
    ARTIFACT_VERSION,
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_IO_ERROR,
    EXIT_NUMERICAL_FAILURE,
    EXIT_OK,
    OUTPUT_DIR_ENV,
    CommandResult,
    build_report,
    execute_command,
    exit_code_for,
    generate_execution_id,
    read_json,
    resolve_output_dir,
    sweep_modes,
    write_json,
)


# ---------------- Output location ----------------

def test_flag_beats_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert resolve_output_dir(tmp_path / "flag", RunConfig()) == tmp_path / "flag"


def test_environment_beats_config(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert resolve_output_dir(None, RunConfig(output_dir="cfg")) == tmp_path / "env"


def test_config_is_the_fallback(monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, "   ")
    assert resolve_output_dir(None, RunConfig(output_dir="cfg")) == Path("cfg")


# ---------------- Exit codes ----------------

@pytest.mark.parametrize(
    "exc, code",
    [
        (ConfigError("x"), EXIT_CONFIG_ERROR),
        (UnsupportedDimension(2), EXIT_CONFIG_ERROR),
        (PreconditionViolation("x"), EXIT_CONFIG_ERROR),
        (IllPosedRequest("x"), EXIT_CONFIG_ERROR),
        (DegenerateWindow("x"), EXIT_CONFIG_ERROR),
        (ReportIOError("x"), EXIT_IO_ERROR),
        (FileNotFoundError("x"), EXIT_IO_ERROR),
        (NumericalFailure("x", index=2), EXIT_NUMERICAL_FAILURE),
    ],
)
def test_exit_code_for(exc, code):
    assert exit_code_for(exc) == code


def test_unknown_errors_propagate():
    with pytest.raises(KeyError):
        exit_code_for(KeyError("x"))


def test_numerical_failure_names_index():
    assert str(NumericalFailure("no convergence", index=3)) == "no convergence (index 3)"


# ---------------- Command execution ----------------

def test_execute_command_writes_status(tmp_path):
    def body(out_dir: Path) -> CommandResult:
        (out_dir / "a.txt").write_text("x", encoding="utf-8")
        return CommandResult(EXIT_CHECK_FAILED, {"a": str(out_dir / "a.txt")}, "one check failed")

    rc = execute_command("demo", tmp_path / "out", body)
    assert rc == EXIT_CHECK_FAILED
    status = read_json(tmp_path / "out" / "status_demo.json")
    assert status["phase"] == "demo"
    assert status["outcome"] == "failed"
    assert status["returncode"] == EXIT_CHECK_FAILED
    assert status["reason"] == "one check failed"
    assert status["artifacts"] == {"a": str(tmp_path / "out" / "a.txt")}
    assert status["duration_sec"] >= 0
    assert status["run_id"].startswith("demo-")
    assert status["ts_utc"].endswith("Z")


def test_execute_command_maps_domain_errors(tmp_path, capsys):
    def body(out_dir: Path) -> CommandResult:
        raise UnsupportedDimension(2)

    rc = execute_command("demo", tmp_path, body)
    assert rc == EXIT_CONFIG_ERROR
    assert "ERROR: [demo] unsupported dimension m=2" in capsys.readouterr().out
    status = read_json(tmp_path / "status_demo.json")
    assert status["outcome"] == "config_error"
    assert status["artifacts"] == {}


def test_execute_command_reports_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("", encoding="utf-8")
    rc = execute_command("demo", blocker / "out", lambda d: CommandResult())
    assert rc == EXIT_IO_ERROR


# ---------------- JSON / files ----------------

def test_write_json_handles_numpy(tmp_path):
    path = tmp_path / "deep" / "x.json"
    write_json(path, {"a": np.float64(1.5), "b": np.arange(3), "c": np.int64(4), "p": Path("x")})
    assert read_json(path) == {"a": 1.5, "b": [0, 1, 2], "c": 4, "p": "x"}


def test_build_report_envelope():
    report = build_report(RunConfig(), "spectrum", {"x": 1})
    assert report["artifact_version"] == ARTIFACT_VERSION
    assert report["command"] == "spectrum"
    assert report["config"]["m"] == 3
    assert report["payload"] == {"x": 1}
    assert report["timestamp"].endswith("Z")


def test_read_samples_round_trip(tmp_path):
    path = tmp_path / "f.dat"
    write_columns_dat(path, {"r": [0.5, 1.5, 2.5], "f": [1.0, -2.0, 3.25]})
    np.testing.assert_array_equal(read_samples(path, 3), [1.0, -2.0, 3.25])


def test_read_samples_checks_count(tmp_path):
    path = tmp_path / "f.dat"
    path.write_text("1.0\n2.0\n", encoding="utf-8")
    with pytest.raises(ReportIOError, match="expected 3 samples, found 2"):
        read_samples(path, 3)


def test_read_samples_rejects_junk(tmp_path):
    path = tmp_path / "f.dat"
    path.write_text("1.0\nabc\n", encoding="utf-8")
    with pytest.raises(ReportIOError):
        read_samples(path, 2)
    with pytest.raises(ReportIOError):
        read_samples(tmp_path / "missing.dat", 2)


# ---------------- Sweeps ----------------

def test_sweep_is_deterministic():
    cfg = RunConfig(operator="drifted", bc_outer="natural", modes=(0, 1), pairs_per_mode=2, r_max=8.0, n_cells=400)
    first = sweep_modes(cfg, tag="test")
    second = sweep_modes(cfg, tag="test")
    assert [r.problem.k for r in first] == [0, 1]
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
        for f, g in zip(a.eigenfunctions, b.eigenfunctions):
            np.testing.assert_array_equal(f.values, g.values)


# ---------------- Run ids ----------------

def test_execution_ids_are_unique():
    first, second = generate_execution_id("verify"), generate_execution_id("verify")
    assert first != second
    assert first.startswith("verify-")
    assert len(first.split("-")[-1]) == 8
