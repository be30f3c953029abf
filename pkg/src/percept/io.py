"""File formats: point-cloud and time-series CSV, PGM images, diagram JSON."""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Sequence

import numpy as np

from .tda.diagram import PersistenceDiagram


class DataError(ValueError):
    """Input file missing, empty or malformed."""


def _require(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise DataError(f"{p} does not exist")
    return p


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_json(path) -> dict:
    p = _require(path)
    try:
        with open(p) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{p}: {exc}") from exc


# point clouds ------------------------------------------------------------------


def write_point_stream(path, frames) -> None:
    """Frames as long-format CSV rows ``t, index, x0, x1, ...`` (t from 1)."""
    frames = list(frames)
    d = np.asarray(frames[0]).shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "index"] + [f"x{j}" for j in range(d)])
        for t, pts in enumerate(frames, start=1):
            for i, row in enumerate(np.asarray(pts, dtype=float)):
                w.writerow([t, i] + [repr(float(v)) for v in row])


def read_point_stream(path) -> list[np.ndarray]:
    p = _require(path)
    rows: dict[int, list] = {}
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3:
            raise DataError(f"{p}: expected header t,index,x0,...")
        for line in reader:
            if not line:
                continue
            try:
                rows.setdefault(int(line[0]), []).append([float(v) for v in line[2:]])
            except ValueError as exc:
                raise DataError(f"{p}: {exc}") from exc
    if not rows:
        raise DataError(f"{p} holds no frames")
    return [np.array(rows[t]) for t in sorted(rows)]


def read_timeseries(path) -> np.ndarray:
    """Numeric CSV, one row per time step; a non-numeric first row is a header."""
    p = _require(path)
    with open(p, newline="") as fh:
        lines = [r for r in csv.reader(fh) if r]
    if lines:
        try:
            [float(v) for v in lines[0]]
        except ValueError:
            lines = lines[1:]
    if not lines:
        raise DataError(f"{p} holds no rows")
    try:
        return np.array([[float(v) for v in r] for r in lines])
    except ValueError as exc:  # also raised for ragged rows
        raise DataError(f"{p}: {exc}") from exc


# images --------------------------------------------------------------------------


def write_pgm(path, image, maxval: int = 255) -> None:
    """Binary (P5) greyscale image; values are rounded and clipped to [0, maxval]."""
    img = np.clip(np.rint(np.asarray(image, dtype=float)), 0, maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode())
        fh.write(img.astype(dtype).tobytes())


def _pgm_tokens(data: bytes, count: int, pos: int):
    out = []
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        out.append(int(data[start:pos]))
    return out, pos


def read_pgm(path) -> np.ndarray:
    """P2 (ascii) or P5 (binary) greyscale image as a float array."""
    p = _require(path)
    data = p.read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise DataError(f"{p} is not a PGM file")
    try:
        (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
        if magic == b"P5":
            dtype = ">u2" if maxval > 255 else "u1"
            raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos + 1)
        else:
            raw = np.array(_pgm_tokens(data, w * h, pos)[0])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{p}: truncated or malformed PGM") from exc
    return raw.reshape(h, w).astype(float)


def read_image_csv(path) -> np.ndarray:
    """Greyscale image stored as a CSV grid, one image row per line."""
    return read_timeseries(path)


def _read_image(path: Path) -> np.ndarray:
    return read_image_csv(path) if path.suffix.lower() == ".csv" else read_pgm(path)


def read_image_stack(path) -> list[np.ndarray]:
    """A directory of .pgm or .csv images in name order, a single .npy (T, H, W) array, or one image."""
    p = _require(path)
    if p.is_dir():
        files = sorted(f for f in os.listdir(p) if f.lower().endswith((".pgm", ".csv")))
        if not files:
            raise DataError(f"{p} holds no .pgm or .csv images")
        return [_read_image(p / f) for f in files]
    if p.suffix == ".npy":
        arr = np.load(p)
        if arr.ndim != 3 or arr.shape[0] == 0:
            raise DataError(f"{p}: expected a (T, H, W) array")
        return list(arr.astype(float))
    return [_read_image(p)]


# diagrams ------------------------------------------------------------------------


def _num(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "nan")


def diagrams_to_json(diagrams: Sequence[PersistenceDiagram]) -> str:
    frames = [{"t": t, "max_value": _num(float(d.max_value)), "pairs": d.to_records()}
              for t, d in enumerate(diagrams, start=1)]
    return json.dumps({"frames": frames}, indent=1)


def diagrams_from_json(text: str) -> list[PersistenceDiagram]:
    doc = json.loads(text)
    out = []
    for fr in sorted(doc["frames"], key=lambda f: f["t"]):
        mv = fr.get("max_value", "nan")
        out.append(PersistenceDiagram.from_records(fr["pairs"], float(mv)))
    return out


def write_diagrams(path, diagrams) -> None:
    Path(path).write_text(diagrams_to_json(diagrams))


def read_diagrams(path) -> list[PersistenceDiagram]:
    p = _require(path)
    try:
        ds = diagrams_from_json(p.read_text())
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{p}: malformed diagram file ({exc})") from exc
    if not ds:
        raise DataError(f"{p} holds no diagrams")
    return ds
