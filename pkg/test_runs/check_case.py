#!/usr/bin/env python3
"""
Simple declarative case checker for the quasi-spectral CLI (no pytest).

Usage:
  python3 test_runs/check_case.py test_runs/cases/<case_dir>

Expects in <case_dir>:
  - expected.json
  - results/            (written by run.sh)
  - results/rc_<command>.txt   (exit code of each CLI call, written by run.sh)

expected.json maps command names to rule blocks:

  {
    "commands": {
      "spectrum": {
        "exit_code": 0,
        "nonempty": ["{results}/spectrum.csv"],
        "csv_header": [{"path": "{results}/spectrum.csv", "equals": ["k", "n", ...]}],
        "json_assert": [{"path": "{results}/spectrum.json", "key": "payload.spectrum.0.multiplicity", "equals": 1}]
      }
    }
  }

json_assert keys are dotted paths; integer parts index into lists.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path
from typing import Any, Dict

import pandas as pd


# ------------------------------------------------------------
# Helpers
# ------------------------------------------------------------

def die(msg: str) -> None:
    raise SystemExit(f"❌ {msg}")


def load_json(p: Path) -> Any:
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except Exception as e:
        die(f"Bad JSON {p}: {e}")


def fmt(tpl: str, ctx: Dict[str, str]) -> str:
    try:
        return tpl.format(**ctx)
    except KeyError as e:
        die(f"Template {tpl} uses unknown {e}")


# ------------------------------------------------------------
# Filesystem checks
# ------------------------------------------------------------

def must_exist(p: str, why: str) -> Path:
    path = Path(p)
    if not path.exists():
        die(f"{why}: missing {path}")
    return path


def must_nonempty(p: str, why: str) -> Path:
    path = must_exist(p, why)
    if path.stat().st_size == 0:
        die(f"{why}: empty {path}")
    return path


def must_be_absent(p: str, why: str) -> None:
    if Path(p).exists():
        die(f"{why}: unexpected {p}")


# ------------------------------------------------------------
# JSON checks
# ------------------------------------------------------------

_MISSING = object()


def lookup(obj: Any, dotted: str) -> Any:
    cur = obj
    for part in dotted.split("."):
        if isinstance(cur, dict) and part in cur:
            cur = cur[part]
        elif isinstance(cur, list) and part.lstrip("-").isdigit() and -len(cur) <= int(part) < len(cur):
            cur = cur[int(part)]
        else:
            return _MISSING
    return cur


def _number(val: Any, label: str, path: Path, key: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        die(f"{label}: {path}: {key} is not a number (got {val!r})")
    return float(val)


def assert_json(path: Path, rule: Dict, label: str) -> None:
    data = load_json(path)

    key = rule.get("key")
    if not key:
        die(f"{label}: json_assert missing key")

    val = lookup(data, key)

    if rule.get("exists") is True:
        if val is _MISSING:
            die(f"{label}: {key} missing in {path}")
        return

    if val is _MISSING:
        die(f"{label}: {path}: {key} missing")

    checked = False

    if "equals" in rule:
        if val != rule["equals"]:
            die(f"{label}: {path}: {key} != {rule['equals']} (got {val})")
        checked = True

    if "in" in rule:
        if val not in rule["in"]:
            die(f"{label}: {path}: {key} not in {rule['in']} (got {val})")
        checked = True

    if "contains" in rule:
        if not isinstance(val, str) or rule["contains"] not in val:
            die(f"{label}: {path}: {key} does not contain {rule['contains']}")
        checked = True

    if "le" in rule:
        if _number(val, label, path, key) > float(rule["le"]):
            die(f"{label}: {path}: {key} > {rule['le']} (got {val})")
        checked = True

    if "ge" in rule:
        if _number(val, label, path, key) < float(rule["ge"]):
            die(f"{label}: {path}: {key} < {rule['ge']} (got {val})")
        checked = True

    if not checked:
        die(f"{label}: bad json_assert rule {rule}")


# ------------------------------------------------------------
# CSV / exit code checks
# ------------------------------------------------------------

def assert_csv_header(path: Path, rule: Dict, label: str) -> None:
    try:
        header = list(pd.read_csv(path, nrows=0).columns)
    except Exception as e:
        die(f"{label}: unreadable CSV {path}: {e}")
    want = rule.get("equals")
    if header != want:
        die(f"{label}: {path}: header {header} != {want}")


def assert_exit_code(results: Path, command: str, expected: int, label: str) -> None:
    p = must_nonempty(str(results / f"rc_{command}.txt"), f"{label} exit code")
    try:
        got = int(p.read_text(encoding="utf-8").strip())
    except ValueError:
        die(f"{label}: bad exit code file {p}")
    if got != expected:
        die(f"{label}: exit code {got} != {expected}")


def apply_block(block: Dict, ctx: Dict[str, str], label: str) -> None:
    for t in block.get("exists", []) or []:
        must_exist(fmt(t, ctx), f"{label} exists")

    for t in block.get("nonempty", []) or []:
        must_nonempty(fmt(t, ctx), f"{label} nonempty")

    for t in block.get("absent", []) or []:
        must_be_absent(fmt(t, ctx), f"{label} absent")

    for rule in block.get("csv_header", []) or []:
        p = must_nonempty(fmt(rule.get("path", ""), ctx), f"{label} csv")
        assert_csv_header(p, rule, label)

    for rule in block.get("json_assert", []) or []:
        p = must_nonempty(fmt(rule.get("path", ""), ctx), f"{label} json")
        assert_json(p, rule, label)


# ------------------------------------------------------------
# Main
# ------------------------------------------------------------

def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("case_dir")
    args = ap.parse_args()

    case_dir = Path(args.case_dir).resolve()
    exp_path = case_dir / "expected.json"
    results = case_dir / "results"

    if not exp_path.exists():
        die(f"Missing {exp_path}")

    exp = load_json(exp_path)
    commands = exp.get("commands")
    if not isinstance(commands, dict) or not commands:
        die("expected.json must contain commands: {}")

    ctx = {"case": str(case_dir), "results": str(results)}
    for command, block in commands.items():
        label = f"{case_dir.name} {command}"
        if "exit_code" in block:
            assert_exit_code(results, command, int(block["exit_code"]), label)
        apply_block(block, ctx, label)
        print(f"✅ {command} OK")

    print(f"\n🎉 Case passed: {case_dir}")


if __name__ == "__main__":
    main()
