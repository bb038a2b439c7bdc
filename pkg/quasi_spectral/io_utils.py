from __future__ import annotations

from pathlib import Path
from typing import Dict, Sequence

import numpy as np
import pandas as pd

from .errors import ReportIOError


def ensure_output_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportIOError(f"cannot create output directory ({e.strerror})", path=path) from e
    if not path.is_dir():
        raise ReportIOError("output path is not a directory", path=path)
    return path


def write_dataframe_csv(path: Path, df: pd.DataFrame) -> None:
    ensure_output_dir(path.parent)
    try:
        df.to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        raise ReportIOError(f"cannot write CSV ({e.strerror})", path=path) from e


def write_columns_dat(path: Path, columns: Dict[str, Sequence[float]]) -> None:
    """Whitespace-separated columns, no header (gnuplot reads it as is)."""
    ensure_output_dir(path.parent)
    df = pd.DataFrame({name: np.asarray(values, dtype=float) for name, values in columns.items()})
    try:
        df.to_csv(path, sep=" ", header=False, index=False, lineterminator="\n")
    except OSError as e:
        raise ReportIOError(f"cannot write DAT ({e.strerror})", path=path) from e


def read_samples(path: Path, expected: int) -> np.ndarray:
    """One sample per line; with several columns the last one is taken."""
    try:
        df = pd.read_csv(path, sep=r"\s+", header=None, comment="#", dtype=float)
    except (OSError, ValueError, pd.errors.ParserError) as e:
        raise ReportIOError(f"cannot read samples ({e})", path=path) from e
    values = df.iloc[:, -1].to_numpy(dtype=float) if df.shape[1] else np.zeros(0)
    if values.shape[0] != expected:
        raise ReportIOError(f"expected {expected} samples, found {values.shape[0]}", path=path)
    if not np.all(np.isfinite(values)):
        raise ReportIOError("samples must be finite", path=path)
    return values
