"""Deterministic CSV/JSON emission and run manifests."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__


def format_float(x: float) -> str:
    """17 significant digits; round-trips exactly. ``-0.0`` is written as ``0``."""
    x = float(x) + 0.0
    if not math.isfinite(x):
        raise ValueError(f"refusing to write non-finite value {x!r}")
    return format(x, ".17g")


def csv_bytes(header: Sequence[str], rows: Iterable[Sequence[float]]) -> bytes:
    lines = [",".join(header)]
    lines.extend(",".join(format_float(v) for v in row) for row in rows)
    return ("\n".join(lines) + "\n").encode("utf-8")


def json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n").encode("utf-8")


def table_json_bytes(header: Sequence[str], rows: Iterable[Sequence[float]]) -> bytes:
    return json_bytes({"columns": list(header), "rows": [[float(v) + 0.0 for v in row] for row in rows]})


def write_atomic(path: str | os.PathLike, data: bytes) -> None:
    """Write via a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest_path(data_path: str | os.PathLike) -> Path:
    data_path = Path(data_path)
    return data_path.with_name(data_path.name + ".manifest.json")


def build_manifest(
    command: str,
    config: dict,
    data: bytes,
    data_path: str | os.PathLike,
    engine: str | None,
    tolerances: dict,
    notes: dict,
    wall_time: float | None = None,
) -> dict:
    manifest = {
        "tool": "ste-entangle",
        "version": __version__,
        "command": command,
        "config": config,
        "engine": engine,
        "tolerances": tolerances,
        "notes": notes,
        "data_file": Path(data_path).name,
        "data_sha256": hashlib.sha256(data).hexdigest(),
    }
    if wall_time is not None:
        manifest["wall_time_s"] = wall_time
    return manifest
