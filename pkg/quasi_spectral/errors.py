from __future__ import annotations

from pathlib import Path
from typing import Optional


class InvalidArgument(ValueError):
    pass


class IncompatibleOperands(ValueError):
    pass


class UnsupportedDimension(ValueError):
    def __init__(self, m: int) -> None:
        super().__init__(f"unsupported dimension m={m} (need m >= 3)")
        self.m = m


class PreconditionViolation(ValueError):
    pass


class IllPosedRequest(ValueError):
    pass


class DegenerateWindow(ValueError):
    pass


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    def __init__(self, msg: str, *, index: Optional[int] = None) -> None:
        super().__init__(msg if index is None else f"{msg} (index {index})")
        self.index = index


class ReportIOError(OSError):
    def __init__(self, msg: str, *, path: Optional[Path] = None) -> None:
        super().__init__(msg if path is None else f"{msg}: {path}")
        self.path = path


def require_dimension(m: int) -> int:
    if not isinstance(m, int) or isinstance(m, bool) or m < 3:
        raise UnsupportedDimension(m)
    return m
