"""CSV/JSON readers and writers. All writes are atomic (temp file + rename)."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .model import HomodyneDataset
from .tomo import DensityMatrix, WignerGrid


def _fmt(v):
    # repr round-trips doubles exactly (17 significant digits at most)
    return repr(float(v))


def atomic_write_text(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_table(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, (int, str)) else _fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def meta_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_dataset(path, dataset: HomodyneDataset):
    """Write ``phi,x`` CSV plus the ``<name>.meta.json`` sidecar."""
    write_table(path, ["phi", "x"], zip(dataset.phi.tolist(), dataset.x.tolist()))
    meta = {
        "n": len(dataset),
        "seed": dataset.meta.get("seed"),
        "calibrated": bool(dataset.calibrated),
        "scale": dataset.meta.get("scale", 1.0),
        "signal": dataset.meta.get("signal"),
        "channel": dataset.meta.get("channel"),
    }
    for key in ("source", "gain"):
        if key in dataset.meta:
            meta[key] = dataset.meta[key]
    write_json(meta_path(path), meta)


def read_dataset(path) -> HomodyneDataset:
    """Read a dataset CSV. Without a sidecar the data count as uncalibrated."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["phi", "x"]:
            raise ValueError(f"{path}: expected header 'phi,x', got {header!r}")
        rows = [(float(a), float(b)) for a, b in reader]
    if not rows:
        raise ValueError(f"{path}: no records")
    arr = np.array(rows, dtype=float)
    meta = {"source": str(path)}
    calibrated = False
    mp = meta_path(path)
    if mp.exists():
        side = read_json(mp)
        meta.update({k: v for k, v in side.items() if k != "source"})
        calibrated = bool(side.get("calibrated", False))
    return HomodyneDataset(arr[:, 0], arr[:, 1], calibrated=calibrated, meta=meta)


def write_rho(path, rho: DensityMatrix):
    write_json(path, rho.to_dict())


def read_rho(path) -> DensityMatrix:
    return DensityMatrix.from_dict(read_json(path))


def write_wigner(path, grid: WignerGrid):
    write_table(path, ["re_z", "im_z", "w"], ((z.real, z.imag, w) for z, w in zip(grid.z, grid.w)))
