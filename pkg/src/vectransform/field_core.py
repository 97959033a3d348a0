"""Forward vector transform and distance transform.

Every pixel gets the unit vector pointing at its closest boundary point.  When
several boundary pixels are equally close the direction points at their mean,
provided the mean lies at least ``d / sqrt(2)`` from the pixel (the set is seen
within a right angle, e.g. around a corner).  Wider spreads come from distinct
boundaries on opposite sides of a medial axis; there the equidistant pixel with
the smallest (y, x) is used instead, so no vector points into empty space
between two boundaries.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from . import _edt
from .errors import AllBoundaryError, EmptyBoundaryError, SingleLabelError, ThickBoundaryError, ValidationError
from .grids import ArgminMap, VectorField, as_mask, pixel_coords

log = logging.getLogger(__name__)

# (dx, dy) in the order boundary pixels look for a neighbour to copy from
NEIGHBOUR_ORDER_4 = ((-1, 0), (0, -1), (1, 0), (0, 1))
NEIGHBOUR_ORDER_8 = ((-1, -1), (1, -1), (-1, 1), (1, 1))


def _require_boundary(mask: np.ndarray) -> None:
    if not mask.any():
        raise EmptyBoundaryError("boundary mask has no boundary pixels")


def nearest_boundary_map(mask) -> ArgminMap:
    """Exact nearest-boundary map via the two-pass Euclidean feature transform."""
    m = as_mask(mask)
    _require_boundary(m)
    d2, nearest, target, ties = _edt.feature_transform(m)
    return ArgminMap(nearest=nearest, target=target, distance=np.sqrt(d2), tie_count=ties)


def brute_force_nearest(mask, chunk: int = 4096) -> ArgminMap:
    """Reference implementation: scan every boundary pixel for every pixel.

    O(N * |boundary|); only meant as an oracle for :func:`nearest_boundary_map`.
    """
    m = as_mask(mask)
    _require_boundary(m)
    h, w = m.shape
    # argwhere is row-major, so the first hit in a row of ``hits`` is the
    # smallest (y, x) member of the equidistant set
    by, bx = np.nonzero(m)
    by = by.astype(np.int64)
    bx = bx.astype(np.int64)
    py, px = np.mgrid[0:h, 0:w]
    py = py.ravel().astype(np.int64)
    px = px.ravel().astype(np.int64)

    n = h * w
    d2 = np.empty(n, dtype=np.int64)
    ties = np.empty(n, dtype=np.int64)
    nearest = np.empty((n, 2), dtype=np.int64)
    mean = np.empty((n, 2), dtype=np.float64)
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        dx = bx[None, :] - px[lo:hi, None]
        dy = by[None, :] - py[lo:hi, None]
        dd = dx * dx + dy * dy
        best = dd.min(axis=1)
        hits = dd == best[:, None]
        cnt = hits.sum(axis=1)
        first = hits.argmax(axis=1)
        d2[lo:hi] = best
        ties[lo:hi] = cnt
        nearest[lo:hi, 0] = bx[first]
        nearest[lo:hi, 1] = by[first]
        mean[lo:hi, 0] = (hits * bx[None, :]).sum(axis=1) / cnt
        mean[lo:hi, 1] = (hits * by[None, :]).sum(axis=1) / cnt

    off2 = (mean[:, 0] - px) ** 2 + (mean[:, 1] - py) ** 2
    degenerate = 2.0 * off2 < d2 - 1e-9
    mean[degenerate] = nearest[degenerate]
    return ArgminMap(
        nearest=nearest.reshape(h, w, 2),
        target=mean.reshape(h, w, 2),
        distance=np.sqrt(d2.reshape(h, w)),
        tie_count=ties.reshape(h, w),
    )


def _directions(amap: ArgminMap) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    f = amap.target - pixel_coords(amap.shape)
    n = np.hypot(f[..., 0], f[..., 1])
    ok = n > 0
    safe = np.where(ok, n, 1.0)
    return f[..., 0] / safe, f[..., 1] / safe, ok


def _borrow_from_neighbours(mask: np.ndarray, vx: np.ndarray, vy: np.ndarray) -> None:
    """Give every boundary pixel the vector of a non-boundary neighbour, in place."""
    h, w = mask.shape
    pending = mask.copy()
    padded = np.pad(~mask, 1, constant_values=False)
    pvx = np.pad(vx, 1)
    pvy = np.pad(vy, 1)
    for order in (NEIGHBOUR_ORDER_4, NEIGHBOUR_ORDER_8):
        for dx, dy in order:
            avail = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
            take = pending & avail
            vx[take] = pvx[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w][take]
            vy[take] = pvy[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w][take]
            pending &= ~take
        if not pending.any():
            return
    n_bad = int(pending.sum())
    if n_bad == mask.size:
        raise AllBoundaryError("every pixel is a boundary pixel")
    msg = f"{n_bad} boundary pixel(s) have no non-boundary 8-neighbour (thick boundary)"
    warnings.warn(msg, stacklevel=3)
    raise ThickBoundaryError(msg)


def vt_from_mask(mask) -> VectorField:
    """Vector transform of a thin boundary mask.

    Non-boundary pixels point at their (averaged) nearest boundary point.
    Boundary pixels copy the vector of the first non-boundary neighbour found
    in the order left, up, right, down, then the four diagonals
    (up-left, up-right, down-left, down-right).  Thick boundaries, where some
    boundary pixel has no non-boundary 8-neighbour, are rejected.
    """
    m = as_mask(mask)
    amap = nearest_boundary_map(m)
    vx, vy, _ = _directions(amap)
    _borrow_from_neighbours(m, vx, vy)
    return VectorField(vx, vy)


def boundary_from_labels(labels) -> np.ndarray:
    """Pixels with at least one 4-neighbour of a different label (both sides, 2 px band)."""
    lab = np.asarray(labels)
    band = np.zeros(lab.shape, dtype=bool)
    dx = lab[:, 1:] != lab[:, :-1]
    dy = lab[1:, :] != lab[:-1, :]
    band[:, 1:] |= dx
    band[:, :-1] |= dx
    band[1:, :] |= dy
    band[:-1, :] |= dy
    return band


def _as_labels(labels) -> np.ndarray:
    lab = np.asarray(labels)
    if lab.ndim != 2 or lab.size == 0:
        raise ValidationError(f"label map must be a non-empty 2-D array, got {lab.shape}")
    if not np.issubdtype(lab.dtype, np.integer):
        if not np.all(lab == np.round(lab)):
            raise ValidationError("label map must hold integer identifiers")
        lab = lab.astype(np.int64)
    if lab.min() < 0:
        raise ValidationError("labels must be non-negative")
    return lab


def nearest_other_label_map(labels) -> ArgminMap:
    """For each pixel, the nearest pixel carrying a different label.

    Each label is processed on its bounding box grown by one pixel: a nearest
    different-label pixel always touches the label's own region, so it can
    never lie further out.
    """
    lab = _as_labels(labels)
    uniq = np.unique(lab)
    if len(uniq) < 2:
        raise SingleLabelError("label map has a single label; no boundary is induced")
    h, w = lab.shape
    nearest = np.empty((h, w, 2), dtype=np.int64)
    target = np.empty((h, w, 2), dtype=np.float64)
    dist = np.empty((h, w), dtype=np.float64)
    ties = np.empty((h, w), dtype=np.int64)
    for value in uniq:
        own = lab == value
        ys, xs = np.nonzero(own)
        y0, y1 = max(0, ys.min() - 1), min(h, ys.max() + 2)
        x0, x1 = max(0, xs.min() - 1), min(w, xs.max() + 2)
        crop = own[y0:y1, x0:x1]
        d2, nn, tg, tc = _edt.feature_transform(~crop)
        sel = crop
        origin = np.array([x0, y0])
        region = (slice(y0, y1), slice(x0, x1))
        nearest[region][sel] = nn[sel] + origin
        target[region][sel] = tg[sel] + origin
        dist[region][sel] = np.sqrt(d2[sel])
        ties[region][sel] = tc[sel]
    return ArgminMap(nearest=nearest, target=target, distance=dist, tie_count=ties)


def vt_from_labels(labels) -> tuple[VectorField, np.ndarray]:
    """Vector transform of a segmentation map.

    Every pixel, boundary pixels included, points toward the closest pixel of
    another label.  Returns the field and the 2-px boundary band.
    """
    amap = nearest_other_label_map(labels)
    vx, vy, ok = _directions(amap)
    assert ok.all()
    return VectorField(vx, vy), boundary_from_labels(labels)


def dt_from_mask(mask) -> np.ndarray:
    """Exact Euclidean distance to the nearest boundary pixel."""
    return nearest_boundary_map(mask).distance
