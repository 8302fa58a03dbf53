"""Deterministic JSON output (sorted keys, no NaN literals)."""

from __future__ import annotations

import hashlib
import json
import math
import os
from typing import Any

import numpy as np

from utils.errors import IoError


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats (-> None)."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dumps(data: Any) -> str:
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path: str, data: Any) -> str:
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(dumps(data))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def read_json(path: str) -> Any:
    if not os.path.exists(path):
        raise IoError(f"file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise IoError(f"invalid JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def content_hash(data: Any) -> str:
    """sha256 of the canonical JSON form."""
    return hashlib.sha256(dumps(data).encode("utf-8")).hexdigest()
