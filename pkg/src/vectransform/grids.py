"""Raster containers shared by all modules.

Rasters are plain 2-D numpy arrays indexed ``[y, x]`` (row-major, y downward,
pixel centres at integer coordinates).  Point coordinates stored in arrays
use ``(x, y)`` order in the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, ValidationError


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


def as_mask(mask) -> np.ndarray:
    """Return ``mask`` as a 2-D boolean array (nonzero = boundary)."""
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValidationError(f"mask must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValidationError("mask must be at least 1x1")
    return m.astype(bool, copy=False)


def check_same_shape(*arrays: np.ndarray) -> tuple[int, int]:
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"shape mismatch: {sorted(shapes)}")
    return shapes.pop()


def pixel_coords(shape: tuple[int, int]) -> np.ndarray:
    """(H, W, 2) float array holding the (x, y) coordinate of every pixel."""
    ys, xs = np.mgrid[0 : shape[0], 0 : shape[1]]
    return np.stack([xs, ys], axis=-1).astype(np.float64)


@dataclass(frozen=True)
class VectorField:
    """Per-pixel 2-vector raster; ``vx`` and ``vy`` have identical shape."""

    vx: np.ndarray
    vy: np.ndarray

    def __post_init__(self):
        vx = np.asarray(self.vx)
        vy = np.asarray(self.vy)
        if vx.ndim != 2:
            raise ValidationError(f"field components must be 2-D, got {vx.shape}")
        check_same_shape(vx, vy)
        object.__setattr__(self, "vx", _frozen(vx, np.float64))
        object.__setattr__(self, "vy", _frozen(vy, np.float64))

    @property
    def shape(self) -> tuple[int, int]:
        return self.vx.shape

    def norm(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)

    def stack(self) -> np.ndarray:
        """(2, H, W) array, vx plane first."""
        return np.stack([self.vx, self.vy])

    def __neg__(self) -> "VectorField":
        return VectorField(-self.vx, -self.vy)

    def is_unit(self, atol: float = 1e-6) -> bool:
        return bool(np.all(np.abs(self.norm() - 1.0) < atol))

    def in_range(self) -> bool:
        return bool(np.all(np.abs(self.vx) <= 1.0) and np.all(np.abs(self.vy) <= 1.0))


@dataclass(frozen=True)
class ArgminMap:
    """Nearest-boundary information for every pixel.

    nearest
        (H, W, 2) int: one closest boundary pixel, the equidistant pixel with
        the smallest (y, x).  ``|p - nearest|`` equals ``distance`` exactly.
    target
        (H, W, 2) float: point the direction is computed toward.  The mean of
        the equidistant set, or ``nearest`` when the set spreads over more
        than a right angle as seen from the pixel.
    distance
        (H, W) float: exact Euclidean distance to the boundary.
    tie_count
        (H, W) int: size of the equidistant set.
    """

    nearest: np.ndarray
    target: np.ndarray
    distance: np.ndarray
    tie_count: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nearest", _frozen(self.nearest, np.int64))
        object.__setattr__(self, "target", _frozen(self.target, np.float64))
        object.__setattr__(self, "distance", _frozen(self.distance, np.float64))
        object.__setattr__(self, "tie_count", _frozen(self.tie_count, np.int64))

    @property
    def shape(self) -> tuple[int, int]:
        return self.distance.shape


@dataclass(frozen=True)
class BoundaryImage:
    """Non-negative boundary strength at support (2H x 2W) or original resolution."""

    strength: np.ndarray
    resolution: str = "original"

    def __post_init__(self):
        if self.resolution not in ("support", "original"):
            raise ValidationError(f"unknown resolution {self.resolution!r}")
        s = np.asarray(self.strength)
        if s.ndim != 2:
            raise ValidationError("strength must be 2-D")
        if np.any(s < 0):
            raise ValidationError("boundary strength must be non-negative")
        object.__setattr__(self, "strength", _frozen(s, np.float64))

    @property
    def shape(self) -> tuple[int, int]:
        return self.strength.shape
