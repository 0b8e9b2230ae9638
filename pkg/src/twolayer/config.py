"""Flat ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored; a trailing ``# ...``
comment after a value is stripped.  Values stay strings here, typed
conversion happens in the consumers.
"""
from __future__ import annotations

from pathlib import Path

from .errors import ScenarioError


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ScenarioError(f"line {lineno}: empty key")
        if key in out:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_kv(path: str | Path) -> dict[str, str]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def dump_kv(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def as_float_list(value: str) -> list[float]:
    return [float(v) for v in value.replace(",", " ").split()]


def as_int_list(value: str) -> list[int]:
    return [int(v) for v in value.replace(",", " ").split()]


def as_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ScenarioError(f"not a boolean: {value!r}")
