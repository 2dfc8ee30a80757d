from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .errors import SnapshotError
from .spectral import Grid, PhysicalField

OUT_DIR = os.path.join("data", "out")
SIDECAR_KEYS = ("n", "length", "d", "time", "name")


def ensure_dirs(out_dir: str | None = None) -> str:
    path = out_dir or OUT_DIR
    os.makedirs(path, exist_ok=True)
    return path


def atomic_write_bytes(path: str, payload: bytes) -> str:
    """Write to a temp file beside `path`, then rename over it."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def atomic_write_text(path: str, text: str) -> str:
    return atomic_write_bytes(path, text.encode("utf-8"))


def _sidecar_path(bin_path: str) -> str:
    root, _ = os.path.splitext(bin_path)
    return root + ".json"


def save_snapshot(u: PhysicalField, path: str, time: float, name: str) -> str:
    """Raw little-endian float64 row-major values plus a {n, length, d, time, name} sidecar.

    The sidecar is written last, so a snapshot with a sidecar is complete.
    """
    grid = u.grid
    atomic_write_bytes(path, np.ascontiguousarray(u.values, dtype="<f8").tobytes(order="C"))
    meta = {"n": grid.n, "length": grid.length, "d": grid.d, "time": float(time), "name": name}
    atomic_write_text(_sidecar_path(path), json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path


def load_snapshot(path: str) -> tuple[PhysicalField, dict]:
    side = _sidecar_path(path)
    if not os.path.exists(side):
        raise SnapshotError(f"missing sidecar {side}")
    if not os.path.exists(path):
        raise SnapshotError(f"missing snapshot data {path}")
    try:
        with open(side, "r", encoding="utf-8") as f:
            meta = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SnapshotError(f"unreadable sidecar {side}: {e}") from e
    missing = [k for k in SIDECAR_KEYS if k not in meta]
    if missing:
        raise SnapshotError(f"sidecar {side} lacks {', '.join(missing)}")
    try:
        grid = Grid(int(meta["n"]), float(meta["length"]), int(meta["d"]))
    except (TypeError, ValueError) as e:
        raise SnapshotError(f"sidecar {side} describes no valid grid: {e}") from e
    with open(path, "rb") as f:
        raw = f.read()
    expected = grid.size * 8
    if len(raw) != expected:
        raise SnapshotError(f"{path} holds {len(raw)} bytes, expected {expected}")
    values = np.frombuffer(raw, dtype="<f8").reshape(grid.shape).astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise SnapshotError(f"{path} contains non-finite values")
    if not math.isfinite(float(meta["time"])):
        raise SnapshotError(f"sidecar {side} has a non-finite time")
    return PhysicalField(grid, values), meta
