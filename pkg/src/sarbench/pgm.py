"""Minimal binary portable graymap (P5) reader and writer.

8-bit rasters are single bytes; 16-bit rasters (maxval > 255) are
big-endian per the format. Loaded values are scaled to [0, 1] by the
file's maxval.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = ["read_pgm", "write_pgm"]


class PgmError(ValueError):
    pass


def _tokens(blob: bytes, path: str):
    """Yield header tokens, skipping whitespace and # comments; returns the
    offset of the raster (one whitespace byte after the last header token)."""
    pos = 0
    found = 0
    while found < 4:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos] not in (0x0A, 0x0D):
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PgmError(f"{path}: truncated header")
        yield blob[start:pos]
        found += 1
    yield pos + 1  # raster starts after a single whitespace byte


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a P5 graymap as a float64 array scaled to [0, 1]."""
    path = str(path)
    blob = Path(path).read_bytes()
    stream = _tokens(blob, path)
    magic = next(stream)
    if magic != b"P5":
        raise PgmError(f"{path}: not a binary graymap (magic {magic!r})")
    try:
        width = int(next(stream))
        height = int(next(stream))
        maxval = int(next(stream))
    except ValueError as exc:
        raise PgmError(f"{path}: malformed header") from exc
    offset = next(stream)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise PgmError(f"{path}: invalid dimensions {width}x{height}, maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = blob[offset : offset + expected]
    if len(raster) != expected:
        raise PgmError(f"{path}: raster holds {len(raster)} bytes, expected {expected}")
    values = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return values.astype(np.float64) / maxval


def write_pgm(path: str | Path, values: np.ndarray, maxval: int = 255) -> None:
    """Write values in [0, 1] as a P5 graymap."""
    if not 0 < maxval < 65536:
        raise PgmError(f"maxval {maxval} out of range")
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise PgmError(f"graymap values must be 2-D, got shape {v.shape}")
    if v.min() < 0 or v.max() > 1:
        raise PgmError("graymap values must lie in [0, 1]")
    quantized = np.rint(v * maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"P5\n{v.shape[1]} {v.shape[0]}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + quantized.astype(dtype).tobytes())
