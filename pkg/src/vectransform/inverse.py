"""Zero-pixel boundary extraction from a vector field.

The field is spread onto a support raster of twice the resolution (values at
even-even positions, zeros elsewhere).  Sobel divergence on that raster is
non-zero only between original pixels, and an ideal straight boundary gives
exactly -2 there.  Boundary strength is ``relu(-(div + 1))``.
"""

from __future__ import annotations

import numpy as np

from .grids import BoundaryImage, VectorField

# Raw Sobel response on the ideal two-half-plane support field is -4 at every
# inter-pixel boundary position; this scale maps it to -2.
SUPPORT_SCALE = 0.5
# Unit-spacing Sobel normalisation: a smoothed central difference.
PIXEL_SCALE = 1.0 / 8.0

_SMOOTH = np.array([1.0, 2.0, 1.0])
_DIFF = np.array([-1.0, 0.0, 1.0])


def _correlate3(img: np.ndarray, along_x: np.ndarray, along_y: np.ndarray) -> np.ndarray:
    """Separable 3x3 correlation with mirror padding (edge pixel not repeated).

    Mirror padding keeps the stencil parity intact on the support raster, so
    even-even positions stay exactly zero and no response appears at borders.
    """
    p = np.pad(img, 1, mode="reflect")
    h, w = img.shape
    tmp = along_y[0] * p[0:h, :] + along_y[1] * p[1 : h + 1, :] + along_y[2] * p[2 : h + 2, :]
    return along_x[0] * tmp[:, 0:w] + along_x[1] * tmp[:, 1 : w + 1] + along_x[2] * tmp[:, 2 : w + 2]


def sobel_x(img: np.ndarray) -> np.ndarray:
    """Unnormalised 3x3 Sobel derivative along x (columns)."""
    return _correlate3(np.asarray(img, dtype=np.float64), _DIFF, _SMOOTH)


def sobel_y(img: np.ndarray) -> np.ndarray:
    return _correlate3(np.asarray(img, dtype=np.float64), _SMOOTH, _DIFF)


def sobel_divergence(field: VectorField, scale: float) -> np.ndarray:
    return scale * (sobel_x(field.vx) + sobel_y(field.vy))


def upsample_support(field: VectorField) -> VectorField:
    h, w = field.shape
    vx = np.zeros((2 * h, 2 * w))
    vy = np.zeros((2 * h, 2 * w))
    vx[::2, ::2] = field.vx
    vy[::2, ::2] = field.vy
    return VectorField(vx, vy)


def divergence(support: VectorField) -> np.ndarray:
    """Calibrated Sobel divergence of a support field."""
    return sobel_divergence(support, SUPPORT_SCALE)


def pixel_divergence(field: VectorField) -> np.ndarray:
    """Divergence at original resolution, without a support raster.

    Normalised as a per-pixel derivative, so an ideal straight boundary shows
    -1 on each of the two pixels flanking it.
    """
    return sobel_divergence(field, PIXEL_SCALE)


def extract_boundary(div: np.ndarray) -> BoundaryImage:
    strength = np.maximum(-(np.asarray(div, dtype=np.float64) + 1.0), 0.0)
    # Original-lattice positions are never boundaries.  With mirror padding
    # their divergence is already zero, this only guards foreign inputs.
    strength[::2, ::2] = 0.0
    # the last odd row/column lies past the image edge and only sees mirrored
    # copies of its neighbours
    if strength.shape[0] % 2 == 0:
        strength[-1, :] = 0.0
    if strength.shape[1] % 2 == 0:
        strength[:, -1] = 0.0
    return BoundaryImage(strength, "support")


def collapse_to_original(b: BoundaryImage) -> BoundaryImage:
    """Move support-raster boundary values onto the neighbouring original pixels.

    A support pixel with one odd coordinate feeds two original pixels, with two
    odd coordinates it feeds four.  Original pixels fed by several support
    pixels take the mean of what they receive.
    """
    s = b.strength
    sh, sw = s.shape
    h, w = (sh + 1) // 2, (sw + 1) // 2
    total = np.zeros((h, w))
    count = np.zeros((h, w))
    sy, sx = np.nonzero(s)
    vals = s[sy, sx]
    for oy in (0, 1):
        for ox in (0, 1):
            ty = (sy + oy) // 2
            tx = (sx + ox) // 2
            # even coordinates have a single lattice neighbour: skip the +1 copy
            keep = ((sy % 2 == 1) | (oy == 0)) & ((sx % 2 == 1) | (ox == 0))
            keep &= (ty < h) & (tx < w)
            np.add.at(total, (ty[keep], tx[keep]), vals[keep])
            np.add.at(count, (ty[keep], tx[keep]), 1.0)
    out = np.divide(total, count, out=np.zeros_like(total), where=count > 0)
    return BoundaryImage(out, "original")


def binarize(b: BoundaryImage) -> np.ndarray:
    """Boundary mask: every pixel with positive strength (divergence below -1)."""
    return b.strength > 0


def invert_field(field: VectorField) -> tuple[BoundaryImage, np.ndarray]:
    """Full inverse pipeline; returns the original-resolution strength and its mask."""
    div = divergence(upsample_support(field))
    orig = collapse_to_original(extract_boundary(div))
    return orig, binarize(orig)


def support_boundary_from_labels(labels) -> np.ndarray:
    """Inter-pixel boundary positions of a label map on the support raster.

    Positions between two 4-adjacent pixels of different labels, and centres
    of 2x2 blocks holding more than one label.
    """
    lab = np.asarray(labels)
    h, w = lab.shape
    out = np.zeros((2 * h, 2 * w), dtype=bool)
    out[::2, 1 : 2 * w - 1 : 2] = lab[:, 1:] != lab[:, :-1]
    out[1 : 2 * h - 1 : 2, ::2] = lab[1:, :] != lab[:-1, :]
    a, b_, c, d = lab[:-1, :-1], lab[:-1, 1:], lab[1:, :-1], lab[1:, 1:]
    mixed = (a != b_) | (a != c) | (a != d)
    out[1 : 2 * h - 1 : 2, 1 : 2 * w - 1 : 2] = mixed
    return out

