"""Canonical JSON serialization with fixed float formatting.

Manifests and model files must be byte-reproducible across runs, so this
module emits JSON with sorted keys and every real number printed with 17
significant digits (enough to round-trip an IEEE double exactly).  Parsing
uses the standard library.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError

__all__ = ["format_float", "dumps_canonical", "dump_canonical", "load_json"]


def format_float(x: float) -> str:
    """An IEEE double as a decimal literal with 17 significant digits."""
    x = float(x)
    if not np.isfinite(x):
        raise ValidationError(f"cannot serialize non-finite number {x!r}")
    return format(x, ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    inner = " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise ValidationError(f"JSON object keys must be strings, got {key!r}")
            items.append(f"{inner}{json.dumps(key)}: {_encode(obj[key], indent, level + 1)}")
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        if any(isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            items = [f"{inner}{_encode(v, indent, level + 1)}" for v in seq]
            return "[\n" + ",\n".join(items) + f"\n{pad}]"
        return "[" + ", ".join(_encode(v, indent, level) for v in seq) + "]"
    raise ValidationError(f"cannot serialize object of type {type(obj).__name__}")


def dumps_canonical(obj, indent: int = 2) -> str:
    """Serialize to deterministic JSON text (sorted keys, 17-digit reals)."""
    return _encode(obj, indent, 0) + "\n"


def dump_canonical(path, obj) -> None:
    Path(path).write_text(dumps_canonical(obj), encoding="utf-8")


def load_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
