"""Small file helpers: atomic writes and key/value text documents."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping


def atomic_write_text(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


def key_value_text(items: Mapping | Iterable[tuple[str, object]]) -> str:
    pairs = items.items() if isinstance(items, Mapping) else items
    return "".join(f"{key}: {format_value(value)}\n" for key, value in pairs)


def write_csv(path: Path, header: str, rows) -> Path:
    lines = [header]
    lines += [",".join(f"{v:.17g}" for v in row) for row in rows]
    return atomic_write_text(path, "\n".join(lines) + "\n")
