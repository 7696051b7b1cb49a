"""Deterministic JSON reading and writing for the harsanyi-*/1 file formats."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import FormatError


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        # Strict JSON has no infinities; reports carry a status string alongside.
        return value if math.isfinite(value) else None
    return obj


def dumps(obj: Any) -> str:
    """Serialize with sorted keys and shortest round-trip floats."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top-level value must be an object")
    return doc


def require(doc: dict, key: str, source: str = "document"):
    if key not in doc:
        raise FormatError(f"{source}: missing key {key!r}")
    return doc[key]


def check_format(doc: dict, expected: str, source: str = "document") -> None:
    fmt = require(doc, "format", source)
    if fmt != expected:
        raise FormatError(f"{source}: key 'format' is {fmt!r}, expected {expected!r}")


def number_array(values, key: str, source: str) -> np.ndarray:
    if not isinstance(values, list):
        raise FormatError(f"{source}: key {key!r} must be an array of numbers")
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise FormatError(f"{source}: key {key!r} contains a non-number entry {v!r}")
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{source}: key {key!r} contains a non-finite entry")
    return arr
