"""Seeded synthetic label maps and boundary masks for tests and demos."""

from __future__ import annotations

import numpy as np
from scipy import ndimage as ndi

Shape = tuple[int, int]


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def rectangles(shape: Shape = (64, 64), n: int = 2, seed=0, min_size: int = 8, margin: int = 3) -> np.ndarray:
    """Background 0 with ``n`` non-overlapping axis-aligned rectangles labelled 1..n."""
    rng = _rng(seed)
    h, w = shape
    lab = np.zeros(shape, dtype=np.int64)
    placed = 0
    for _ in range(200 * n):
        if placed == n:
            break
        rh = int(rng.integers(min_size, max(min_size + 1, h // 2)))
        rw = int(rng.integers(min_size, max(min_size + 1, w // 2)))
        y0 = int(rng.integers(margin, max(margin + 1, h - rh - margin)))
        x0 = int(rng.integers(margin, max(margin + 1, w - rw - margin)))
        # keep a gap so rectangles never touch
        if lab[max(0, y0 - 2) : y0 + rh + 2, max(0, x0 - 2) : x0 + rw + 2].any():
            continue
        placed += 1
        lab[y0 : y0 + rh, x0 : x0 + rw] = placed
    return lab


def disk(shape: Shape = (64, 64), center=None, radius: float = 20.0) -> np.ndarray:
    """Filled disk labelled 1 on background 0."""
    h, w = shape
    cy, cx = ((h - 1) / 2, (w - 1) / 2) if center is None else center
    ys, xs = np.mgrid[0:h, 0:w]
    return ((xs - cx) ** 2 + (ys - cy) ** 2 <= radius**2).astype(np.int64)


def disks(shape: Shape = (64, 64), n: int = 2, seed=0, rmin: float = 5.0, rmax: float = 14.0) -> np.ndarray:
    """Non-overlapping filled disks labelled 1..n on background 0."""
    rng = _rng(seed)
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    lab = np.zeros(shape, dtype=np.int64)
    placed = []
    for _ in range(200 * n):
        if len(placed) == n:
            break
        r = float(rng.uniform(rmin, rmax))
        cy = float(rng.uniform(r + 2, h - r - 3))
        cx = float(rng.uniform(r + 2, w - r - 3))
        if any(np.hypot(cy - py, cx - px) < r + pr + 3 for py, px, pr in placed):
            continue
        placed.append((cy, cx, r))
        lab[(xs - cx) ** 2 + (ys - cy) ** 2 <= r * r] = len(placed)
    return lab


def voronoi_seeds(shape: Shape = (64, 64), n_seeds: int = 5, seed=0, min_sep: float = 12.0) -> np.ndarray:
    """``(n, 2)`` array of ``(y, x)`` seeds at least ``min_sep`` apart (fewer if space runs out)."""
    rng = _rng(seed)
    h, w = shape
    pts: list[tuple[float, float]] = []
    for _ in range(1000 * n_seeds):
        if len(pts) == n_seeds:
            break
        p = (float(rng.uniform(0, h - 1)), float(rng.uniform(0, w - 1)))
        if all(np.hypot(p[0] - q[0], p[1] - q[1]) >= min_sep for q in pts):
            pts.append(p)
    return np.array(pts).reshape(-1, 2)


def voronoi_from_seeds(shape: Shape, seeds) -> np.ndarray:
    """Label map assigning every pixel the index of its nearest ``(y, x)`` seed."""
    s = np.asarray(seeds, dtype=np.float64).reshape(-1, 2)
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    d = (ys[None] - s[:, 0, None, None]) ** 2 + (xs[None] - s[:, 1, None, None]) ** 2
    return np.argmin(d, axis=0).astype(np.int64)


def voronoi(shape: Shape = (64, 64), n_seeds: int = 5, seed=0, min_sep: float = 12.0, jitter: float = 0.0) -> np.ndarray:
    """Voronoi label map of ``n_seeds`` well-separated random seeds.

    ``jitter`` perturbs the seeds by Gaussian noise after placement, which
    turns the same ``seed`` into a slightly wrong "prediction" of the map.
    """
    seeds = voronoi_seeds(shape, n_seeds, seed, min_sep)
    if jitter > 0:
        seeds = seeds + _rng(None if isinstance(seed, np.random.Generator) else seed + 10_000).normal(0, jitter, seeds.shape)
    return voronoi_from_seeds(shape, seeds)


def perturbed_voronoi(shape: Shape = (64, 64), n_seeds: int = 6, seed: int = 0, min_sep: float = 12.0, drop: int = 1, add: int = 1):
    """``(truth, prediction)`` Voronoi pair.

    The prediction keeps all but ``drop`` seeds and gains ``add`` random ones:
    most boundaries coincide exactly, a few are missed and a few spurious,
    the way a good detector errs.
    """
    seeds = voronoi_seeds(shape, n_seeds, seed, min_sep)
    rng = np.random.default_rng(seed + 20_000)
    keep = seeds[np.sort(rng.permutation(len(seeds))[: max(1, len(seeds) - drop)])]
    extra = np.column_stack([rng.uniform(0, shape[0] - 1, add), rng.uniform(0, shape[1] - 1, add)])
    return voronoi_from_seeds(shape, seeds), voronoi_from_seeds(shape, np.vstack([keep, extra]))


def half_planes(shape: Shape = (64, 64), angle_deg: float = 0.0, offset: float = 0.0) -> np.ndarray:
    """Two labels split by a straight line through the image centre.

    The line normal makes ``angle_deg`` with the x axis; ``offset`` shifts the
    line along its normal.
    """
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    t = np.deg2rad(angle_deg)
    s = (xs - (w - 1) / 2) * np.cos(t) + (ys - (h - 1) / 2) * np.sin(t) - offset
    return (s > 0).astype(np.int64)


def remove_thin_features(labels, max_iter: int = 20) -> np.ndarray:
    """Reassign pixels of regions that are less than 2 px wide.

    A pixel survives if it belongs to some fully-own-label 2x2 block.  Others
    take the most frequent different label among their 8 neighbours
    (smallest label on ties), repeated until nothing changes.
    """
    lab = np.array(labels, dtype=np.int64, copy=True)
    h, w = lab.shape
    for _ in range(max_iter):
        changed = False
        for value in np.unique(lab):
            region = lab == value
            thin = region & ~ndi.binary_opening(region, np.ones((2, 2), dtype=bool))
            for y, x in np.argwhere(thin):
                win = lab[max(0, y - 1) : y + 2, max(0, x - 1) : x + 2].ravel()
                win = win[win != value]
                if win.size:
                    lab[y, x] = np.bincount(win).argmax()
                    changed = True
        if not changed:
            break
    return lab


def label_suite(count: int = 50, shape: Shape = (64, 64), seed: int = 0, regularize: bool = True) -> list[np.ndarray]:
    """Deterministic mix of rectangle, disk and Voronoi maps.

    Object sizes scale with ``min(shape) / 64``.  With ``regularize``
    (default) sub-2-px slivers and spurs left by
    rasterisation are removed, see :func:`remove_thin_features`.
    """
    rng = np.random.default_rng(seed)
    # feature sizes are tuned for 64x64 and grow with the image
    s = min(shape) / 64.0
    out = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            lab = rectangles(shape, n=int(rng.integers(1, 4)), seed=rng, min_size=max(4, round(8 * s)))
        elif kind == 1:
            lab = disks(shape, n=int(rng.integers(1, 4)), seed=rng, rmin=5.0 * s, rmax=14.0 * s)
        else:
            lab = voronoi(shape, n_seeds=int(rng.integers(2, 7)), seed=rng, min_sep=12.0 * s)
        out.append(remove_thin_features(lab) if regularize else lab)
    return out


def thin_boundary(labels) -> np.ndarray:
    """One-sided 1-px boundary: pixels whose right or lower neighbour differs."""
    lab = np.asarray(labels)
    m = np.zeros(lab.shape, dtype=bool)
    m[:, :-1] |= lab[:, 1:] != lab[:, :-1]
    m[:-1, :] |= lab[1:, :] != lab[:-1, :]
    return m


def line_mask(shape: Shape, p0, p1) -> np.ndarray:
    """Rasterised segment from ``p0`` to ``p1`` (``(x, y)``), 8-connected."""
    m = np.zeros(shape, dtype=bool)
    (x0, y0), (x1, y1) = p0, p1
    n = int(max(abs(x1 - x0), abs(y1 - y0))) + 1
    xs = np.rint(np.linspace(x0, x1, n)).astype(int)
    ys = np.rint(np.linspace(y0, y1, n)).astype(int)
    ok = (xs >= 0) & (xs < shape[1]) & (ys >= 0) & (ys < shape[0])
    m[ys[ok], xs[ok]] = True
    return m
