"""Canonical JSON text: sorted keys, reals with at most 6 fractional digits.

Every file the pipeline writes goes through :func:`dumps` so that golden
tests can compare bytes.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from enum import Enum
from pathlib import Path
from typing import Any

DECIMALS = 6


def quantize(x: float) -> float:
    """Round to the precision the serializer keeps, so values round-trip."""
    q = round(float(x), DECIMALS)
    return 0.0 if q == 0 else q


def format_real(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"cannot serialize non-finite real {x!r}")
    text = f"{x:.{DECIMALS}f}"
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    if text in ("-0", ""):
        text = "0"
    return text


def _encode(value: Any, indent: int | None, level: int) -> str:
    compact = indent is None
    pad = "" if compact else " " * (indent * (level + 1))
    end = "" if compact else " " * (indent * level)
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, Enum):
        value = value.value
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_real(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = sorted((str(k.value if isinstance(k, Enum) else k), v) for k, v in value.items())
        if compact:
            return "{" + ", ".join(f"{json.dumps(k, ensure_ascii=False)}: {_encode(v, None, 0)}" for k, v in items) + "}"
        body = ",\n".join(
            f"{pad}{json.dumps(k, ensure_ascii=False)}: {_encode(v, indent, level + 1)}" for k, v in items
        )
        return "{\n" + body + "\n" + end + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if compact or all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in value) + "]"
        body = ",\n".join(pad + _encode(v, indent, level + 1) for v in value)
        return "[\n" + body + "\n" + end + "]"
    raise TypeError(f"not serializable: {type(value).__name__}")


def dumps(value: Any, *, indent: int = 2) -> str:
    """Serialize ``value`` canonically, with a trailing newline."""
    return _encode(value, indent, 0) + "\n"


def dumps_line(value: Any) -> str:
    """Single-line canonical form (for newline-delimited streams)."""
    return _encode(value, None, 0)


def atomic_write(path: str | os.PathLike, data: bytes | str) -> None:
    """Write via a temp file in the same directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
