"""Readers and writers for masks, label maps and vector-field files.

Field files ("VTF1") are a 16-byte little-endian header -- magic, channel
count, width, height as u32 -- followed by ``channels`` row-major float32
planes (vx before vy).
"""

from __future__ import annotations

import os
import re
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    BadMagicError,
    DimensionOverflowError,
    MalformedHeaderError,
    NonFiniteError,
    TruncatedPayloadError,
    ValidationError,
)
from .grids import VectorField, as_mask

FIELD_MAGIC = b"VTF1"
_HEADER = struct.Struct("<4sIII")
# refuse absurd rasters before allocating
MAX_SIDE = 1 << 16
MAX_PIXELS = 1 << 28

PathLike = str | os.PathLike


def _check_dims(w: int, h: int) -> None:
    if w < 1 or h < 1:
        raise MalformedHeaderError(f"non-positive dimensions {w}x{h}")
    if w > MAX_SIDE or h > MAX_SIDE or w * h > MAX_PIXELS:
        raise DimensionOverflowError(f"dimensions {w}x{h} exceed the supported size")


# --------------------------------------------------------------------------
# PGM


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pgm_header(data: bytes) -> tuple[int, int, int, int]:
    """Parse ``P5 w h maxval``; return (w, h, maxval, payload offset)."""
    if data[:2] != b"P5":
        raise MalformedHeaderError("not a binary PGM (P5) file")
    pos = 2
    vals = []
    for _ in range(3):
        m = _TOKEN.match(data, pos)
        if not m:
            raise MalformedHeaderError("truncated PGM header")
        try:
            vals.append(int(m.group(1)))
        except ValueError:
            raise MalformedHeaderError(f"bad PGM header token {m.group(1)!r}") from None
        pos = m.end()
    if pos >= len(data) or data[pos : pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise MalformedHeaderError("PGM header must end with one whitespace byte")
    w, h, maxval = vals
    if not 0 < maxval < 65536:
        raise MalformedHeaderError(f"PGM maxval {maxval} out of range")
    _check_dims(w, h)
    return w, h, maxval, pos + 1


def read_pgm(path: PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    w, h, maxval, off = _pgm_header(data)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = w * h * dtype.itemsize
    if len(data) - off != need:
        raise MalformedHeaderError(f"PGM declares {w}x{h} ({need} bytes) but holds {len(data) - off}")
    return np.frombuffer(data, dtype=dtype, count=w * h, offset=off).reshape(h, w).astype(np.uint16 if maxval > 255 else np.uint8)


def write_pgm(path: PathLike, img: np.ndarray) -> None:
    a = np.asarray(img)
    if a.ndim != 2:
        raise ValidationError("PGM images are 2-D")
    h, w = a.shape
    _check_dims(w, h)
    if a.dtype == bool:
        a = a.astype(np.uint8) * 255
    if a.min(initial=0) < 0 or a.max(initial=0) > 65535:
        raise ValidationError("PGM values must lie in [0, 65535]")
    maxval = 255 if a.max(initial=0) <= 255 else 65535
    body = a.astype(">u2" if maxval > 255 else "u1").tobytes()
    Path(path).write_bytes(b"P5\n%d %d\n%d\n" % (w, h, maxval) + body)


# --------------------------------------------------------------------------
# generic grayscale images


def _is_pgm(path: PathLike) -> bool:
    return Path(path).suffix.lower() in (".pgm", ".pnm")


def read_gray(path: PathLike) -> np.ndarray:
    if _is_pgm(path):
        return read_pgm(path)
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("L", "I;16", "I;16B", "I", "1", "P"):
                raise MalformedHeaderError(f"{path}: expected a grayscale image, got mode {im.mode}")
            a = np.array(im)
    except (Image.UnidentifiedImageError, SyntaxError) as e:
        raise MalformedHeaderError(f"{path}: {e}") from e
    if a.ndim != 2:
        raise MalformedHeaderError(f"{path}: expected one channel")
    _check_dims(a.shape[1], a.shape[0])
    return a


def read_mask(path: PathLike) -> np.ndarray:
    """Boolean mask from a PGM or grayscale PNG; nonzero is boundary."""
    return read_gray(path) != 0


def write_mask(path: PathLike, mask) -> None:
    m = as_mask(mask)
    if _is_pgm(path):
        write_pgm(path, m)
    else:
        Image.fromarray(m.astype(np.uint8) * 255, mode="L").save(path)


def read_labels(path: PathLike) -> np.ndarray:
    return read_gray(path).astype(np.int64)


def write_labels(path: PathLike, labels) -> None:
    """16-bit grayscale PNG (or 16-bit PGM) of non-negative identifiers."""
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise ValidationError("label maps are 2-D")
    if lab.min(initial=0) < 0 or lab.max(initial=0) > 65535:
        raise ValidationError("labels must fit in 16 bits")
    if _is_pgm(path):
        write_pgm(path, lab.astype(np.uint16))
    else:
        Image.fromarray(lab.astype(np.uint16)).save(path)


# --------------------------------------------------------------------------
# field files


def write_planes(path: PathLike, planes) -> None:
    arr = np.asarray(planes, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValidationError("expected (channels, H, W) planes")
    c, h, w = arr.shape
    _check_dims(w, h)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("refusing to write non-finite values")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FIELD_MAGIC, c, w, h))
        fh.write(arr.astype("<f4").tobytes())


def read_planes(path: PathLike) -> np.ndarray:
    """Return the (channels, H, W) float32 payload of a field file."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: shorter than the field header")
    magic, c, w, h = _HEADER.unpack_from(data)
    if magic != FIELD_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if c < 1:
        raise MalformedHeaderError(f"{path}: zero channels")
    _check_dims(w, h)
    need = c * w * h * 4
    got = len(data) - _HEADER.size
    if got != need:
        raise TruncatedPayloadError(f"{path}: payload is {got} bytes, header declares {need}")
    arr = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(c, h, w).astype(np.float32)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{path}: payload holds non-finite values")
    return arr


def write_field(path: PathLike, field: VectorField) -> None:
    write_planes(path, field.stack())


def read_field(path: PathLike) -> VectorField:
    arr = read_planes(path)
    if arr.shape[0] != 2:
        raise MalformedHeaderError(f"{path}: a vector field needs 2 channels, found {arr.shape[0]}")
    return VectorField(arr[0], arr[1])
