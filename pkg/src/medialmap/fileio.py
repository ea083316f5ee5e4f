"""File formats: MMAF1 field files, PGM masks and renderings, CSV point sets.

MMAF1 is one line of JSON (magic, nx, ny, origin_x, origin_y, spacing_h)
followed by nx*ny little-endian float64 values, row-major with row 0 at the
smallest y. PGM images are stored top row first, so grid rows are flipped
on the way in and out to keep y pointing up in viewers.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .fields import BinaryMask2, GridSpec, PointSet2, ScalarField2

MAGIC = "MMAF1"
_HEADER_KEYS = ("magic", "nx", "ny", "origin_x", "origin_y", "spacing_h")


class FormatError(ValueError):
    """Input that does not parse."""


# -- MMAF1 -------------------------------------------------------------------

def field_to_bytes(field: ScalarField2) -> bytes:
    s = field.spec
    header = {"magic": MAGIC, "nx": s.nx, "ny": s.ny, "origin_x": float(s.origin_x),
              "origin_y": float(s.origin_y), "spacing_h": float(s.spacing_h)}
    line = json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n"
    return line.encode("ascii") + np.ascontiguousarray(field.values, dtype="<f8").tobytes()


def field_from_bytes(data: bytes) -> ScalarField2:
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("field file: missing header line")
    try:
        header = json.loads(data[:nl].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"field file: bad header ({exc})") from None
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise FormatError("field file: wrong magic")
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise FormatError(f"field file: header lacks {missing}")
    nx, ny = header["nx"], header["ny"]
    if not (isinstance(nx, int) and isinstance(ny, int)) or nx < 1 or ny < 1:
        raise FormatError("field file: nx, ny must be positive integers")
    payload = data[nl + 1:]
    if len(payload) != 8 * nx * ny:
        raise FormatError(f"field file: payload has {len(payload)} bytes, expected {8 * nx * ny}")
    spec = GridSpec(float(header["origin_x"]), float(header["origin_y"]), float(header["spacing_h"]), nx, ny)
    values = np.frombuffer(payload, dtype="<f8").reshape(ny, nx).astype(np.float64)
    try:
        return ScalarField2(spec, values)
    except ValueError as exc:
        raise FormatError(f"field file: {exc}") from None


def write_field(path, field: ScalarField2) -> None:
    Path(path).write_bytes(field_to_bytes(field))


def read_field(path) -> ScalarField2:
    return field_from_bytes(Path(path).read_bytes())


# -- PGM -----------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _tokens(data: bytes, count: int, pos: int) -> tuple[list[bytes], int]:
    out = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise FormatError("PGM: truncated header")
        out.append(m.group(1))
        pos = m.end()
    return out, pos


def read_pgm(path) -> np.ndarray:
    """Gray levels as an (rows, cols) array, top row first. Accepts P5 and P2."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise FormatError("PGM: expected P5 or P2")
    try:
        (w, h, maxval), pos = _tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise FormatError("PGM: non-integer header field") from None
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise FormatError("PGM: bad dimensions or maxval")
    if magic == b"P5":
        pos += 1    # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[pos:pos + w * h * dtype.itemsize]
        if len(raw) != w * h * dtype.itemsize:
            raise FormatError("PGM: truncated raster")
        img = np.frombuffer(raw, dtype=dtype).reshape(h, w)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(body) < w * h:
            raise FormatError("PGM: truncated raster")
        try:
            img = np.array([int(t) for t in body[:w * h]], dtype=np.int64).reshape(h, w)
        except ValueError:
            raise FormatError("PGM: non-integer sample") from None
    if img.max(initial=0) > maxval:
        raise FormatError("PGM: sample exceeds maxval")
    return img.astype(np.int64)


def write_pgm(path, img: np.ndarray) -> None:
    """8-bit P5, top row first."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + img.astype(np.uint8).tobytes())


def mask_from_pgm(path, spec: GridSpec | None = None) -> BinaryMask2:
    img = read_pgm(path)
    bits = img[::-1] != 0
    if spec is None:
        spec = GridSpec(0.0, 0.0, 1.0, bits.shape[1], bits.shape[0])
    elif spec.shape != bits.shape:
        raise FormatError(f"PGM is {bits.shape[1]}x{bits.shape[0]} but the grid is {spec.nx}x{spec.ny}")
    return BinaryMask2(spec, bits)


def write_mask_pgm(path, mask: BinaryMask2) -> None:
    write_pgm(path, np.where(mask.bits[::-1], 255, 0))


def render_pgm(path, field: ScalarField2) -> dict:
    """Min-max normalized 8-bit rendering plus a sidecar ``<path>.json``
    recording the range. Returns the sidecar contents."""
    v = field.values
    lo, hi = float(v.min()), float(v.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    write_pgm(path, np.rint((v[::-1] - lo) * scale))
    meta = {"min": lo, "max": hi, "levels": 256, "rows": "top row is the largest y"}
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2) + "\n")
    return meta


# -- CSV -------------------------------------------------------------------------

def read_points_csv(path) -> PointSet2:
    """One ``x,y`` pair per line; blank lines and ``#`` comments ignored."""
    pts = []
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise FormatError(f"CSV line {n}: expected 'x,y', got {line!r}")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise FormatError(f"CSV line {n}: non-numeric value in {line!r}") from None
        if not (np.isfinite(x) and np.isfinite(y)):
            raise FormatError(f"CSV line {n}: non-finite value")
        pts.append((x, y))
    return PointSet2(np.array(pts, dtype=float).reshape(-1, 2))
