"""Deterministic JSON for configs and reports.

Two runs with the same inputs must produce byte-identical documents, so all
serialization funnels through one writer: keys sorted, floats rendered as
decimal numbers with 17 significant digits (enough to round-trip a double),
no dependence on dict insertion order or platform repr.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

import numpy as np


def to_jsonable(obj: Any) -> Any:
    """Convert numpy containers/scalars to plain Python recursively."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _fmt_scalar(x: Any) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r} cannot appear in a report")
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    if x is None:
        return "null"
    raise TypeError(f"unsupported type in report: {type(x).__name__}")


def canonical_json(obj: Any, indent: int | None = None) -> str:
    """Render ``obj`` as deterministic JSON text.

    ``indent=None`` gives the compact form used for digests; an integer
    gives a pretty-printed form with the same number formatting.
    """
    obj = to_jsonable(obj)

    def emit(node: Any, level: int) -> str:
        if isinstance(node, dict):
            if not node:
                return "{}"
            items = sorted(node.items())
            if indent is None:
                return "{" + ",".join(f"{json.dumps(k)}:{emit(v, level)}" for k, v in items) + "}"
            pad = " " * (indent * (level + 1))
            close = " " * (indent * level)
            body = ",\n".join(f"{pad}{json.dumps(k)}: {emit(v, level + 1)}" for k, v in items)
            return "{\n" + body + "\n" + close + "}"
        if isinstance(node, list):
            if not node:
                return "[]"
            if indent is None:
                return "[" + ",".join(emit(v, level) for v in node) + "]"
            pad = " " * (indent * (level + 1))
            close = " " * (indent * level)
            body = ",\n".join(f"{pad}{emit(v, level + 1)}" for v in node)
            return "[\n" + body + "\n" + close + "]"
        return _fmt_scalar(node)

    return emit(obj, 0)


def sha256_digest(obj: Any) -> str:
    """Content hash of the canonical (compact) JSON form."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def write_json(path: str, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(obj, indent=2))
        fh.write("\n")


def format_float(x: float) -> str:
    """17-significant-digit decimal form, shared with CSV emission."""
    return _fmt_scalar(float(x))
