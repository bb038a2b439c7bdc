from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .errors import ConfigError
from .modes import BOUNDARIES, DEFAULT_BC, OPERATORS

MAX_M = 12
MAX_K = 64
MAX_R = 20.0
MIN_CELLS = 8
MAX_CELLS = 200_000
MAX_FAMILY = 1000

KNOWN_KEYS = (
    "operator",
    "m",
    "modes",
    "pairs_per_mode",
    "r_max",
    "n_cells",
    "bc_outer",
    "merge_tol",
    "output_dir",
    "seed",
    "ladder",
    "family_size",
)


def _die(msg: str) -> None:
    raise ConfigError(msg)


def _opt_int(d: Dict[str, Any], key: str, default: int, lo: int, hi: Optional[int] = None) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        _die(f"Config field must be int: root.{key} (got {type(v).__name__})")
    if v < lo or (hi is not None and v > hi):
        bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        _die(f"Config field out of range: root.{key}={v} (allowed {bound})")
    return int(v)


def _opt_float(d: Dict[str, Any], key: str, default: float) -> float:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _die(f"Config field must be a number: root.{key} (got {type(v).__name__})")
    return float(v)


def _opt_choice(d: Dict[str, Any], key: str, default: Optional[str], choices: Tuple[str, ...]) -> Optional[str]:
    v = d.get(key, default)
    if v is None:
        return None
    if not isinstance(v, str) or v.strip() not in choices:
        _die(f"Config field must be one of {list(choices)}: root.{key} (got {v!r})")
    return v.strip()


def _opt_int_list(d: Dict[str, Any], key: str, default: List[int]) -> List[int]:
    v = d.get(key, default)
    if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in v):
        _die(f"Config field must be a list of ints: root.{key}")
    return [int(x) for x in v]


@dataclass(frozen=True)
class RunConfig:
    operator: str = "quasi"
    m: int = 3
    modes: Tuple[int, int] = (0, 8)
    pairs_per_mode: int = 4
    r_max: float = 12.0
    n_cells: int = 2400
    bc_outer: str = "dirichlet"
    merge_tol: float = 1e-6
    output_dir: str = "results"
    seed: int = 0
    ladder: Tuple[int, ...] = field(default=(300, 600, 1200, 2400))
    family_size: int = 50

    @property
    def k_values(self) -> List[int]:
        return list(range(self.modes[0], self.modes[1] + 1))

    @staticmethod
    def from_dict(raw: Any) -> "RunConfig":
        if not isinstance(raw, dict):
            _die("Bad config root: expected mapping")

        unknown = sorted(set(raw) - set(KNOWN_KEYS))
        if unknown:
            _die(f"Unknown config field: root.{unknown[0]}")

        operator = _opt_choice(raw, "operator", "quasi", OPERATORS) or "quasi"
        m = _opt_int(raw, "m", 3, 3, MAX_M)

        modes = _opt_int_list(raw, "modes", [0, 8])
        if len(modes) != 2 or not 0 <= modes[0] <= modes[1] <= MAX_K:
            _die(f"Config field must be [k_lo, k_hi] with 0 <= k_lo <= k_hi <= {MAX_K}: root.modes (got {modes})")

        n_cells = _opt_int(raw, "n_cells", 2400, MIN_CELLS, MAX_CELLS)
        pairs = _opt_int(raw, "pairs_per_mode", 4, 1, n_cells)

        r_max = _opt_float(raw, "r_max", 12.0)
        if not 0 < r_max <= MAX_R:
            _die(f"Config field out of range: root.r_max={r_max} (allowed (0, {MAX_R}])")

        bc_outer = _opt_choice(raw, "bc_outer", None, BOUNDARIES) or DEFAULT_BC[operator]

        merge_tol = _opt_float(raw, "merge_tol", 1e-6)
        if not 0 < merge_tol < 1:
            _die(f"Config field out of range: root.merge_tol={merge_tol} (allowed (0, 1))")

        output_dir = raw.get("output_dir", "results")
        if not isinstance(output_dir, str) or not output_dir.strip():
            _die("Config field must be non-empty string: root.output_dir")

        seed = _opt_int(raw, "seed", 0, 0)

        ladder = _opt_int_list(raw, "ladder", [300, 600, 1200, 2400])
        if len(ladder) < 3:
            _die(f"Config field needs at least 3 levels: root.ladder (got {len(ladder)})")
        ratio = ladder[1] // ladder[0] if ladder[0] >= MIN_CELLS else 0
        if ratio < 2 or any(b != ratio * a for a, b in zip(ladder, ladder[1:])) or ladder[-1] > MAX_CELLS:
            _die(f"Config field must grow by a constant integer ratio >= 2 from >= {MIN_CELLS}: root.ladder")

        family_size = _opt_int(raw, "family_size", 50, 1, MAX_FAMILY)

        return RunConfig(
            operator=operator,
            m=m,
            modes=(modes[0], modes[1]),
            pairs_per_mode=pairs,
            r_max=r_max,
            n_cells=n_cells,
            bc_outer=bc_outer,
            merge_tol=merge_tol,
            output_dir=output_dir.strip(),
            seed=seed,
            ladder=tuple(ladder),
            family_size=family_size,
        )

    @staticmethod
    def load(config_path: Path) -> "RunConfig":
        try:
            text = config_path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config {config_path}: {e}") from e

        if config_path.suffix.lower() in (".yaml", ".yml"):
            try:
                raw = yaml.safe_load(text) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Bad YAML in {config_path}: {e}") from e
        else:
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigError(f"Bad JSON in {config_path}: {e}") from e

        return RunConfig.from_dict(raw)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "operator": self.operator,
            "m": self.m,
            "modes": list(self.modes),
            "pairs_per_mode": self.pairs_per_mode,
            "r_max": self.r_max,
            "n_cells": self.n_cells,
            "bc_outer": self.bc_outer,
            "merge_tol": self.merge_tol,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "ladder": list(self.ladder),
            "family_size": self.family_size,
        }
