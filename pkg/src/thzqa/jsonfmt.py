"""Deterministic JSON text with fixed float precision."""

from __future__ import annotations

import json
import math


def _format(value, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return "null"
        text = format(value, ".17g")
        if all(c not in text for c in ".en"):
            text += ".0"
        return text
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_format(v, indent, level + 1)}" for k, v in value.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return "[" + ", ".join(_format(v, indent, level + 1) for v in value) + "]"
        items = [_format(v, indent, level + 1) for v in value]
        return "[" + pad + ("," + pad).join(items) + end + "]"
    if hasattr(value, "item"):
        return _format(value.item(), indent, level)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps_json(value, indent: int = 2) -> str:
    """JSON text with floats written to 17 significant digits; NaN/inf become null."""
    return _format(value, indent, 0) + "\n"
