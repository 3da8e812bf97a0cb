"""Small serialization helpers: canonical numbers, fixed-point JSON, atomic writes."""

import math
import os
import tempfile
from pathlib import Path


def fmt_num(x):
    """Shortest text that parses back to exactly ``x``; integral values drop the ``.0``."""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def dumps_fixed(obj, decimals=6, indent=2, _level=0):
    """JSON text with every float written in fixed-point notation.

    ``json.dumps`` offers no hook for float formatting, so this walks the
    structure itself. Keys are sorted for byte-stable output.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return f"{obj:.{decimals}f}"
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{dumps_fixed(str(k))}: {dumps_fixed(obj[k], decimals, indent, _level + 1)}"
            for k in sorted(obj)
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{dumps_fixed(v, decimals, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return dumps_fixed(obj.item(), decimals, indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temp file in the same directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
