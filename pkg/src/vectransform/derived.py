"""Applications of a boundary vector field: directions, straight lines, superpixels."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi
from scipy.spatial import cKDTree
from sklearn.cluster import DBSCAN

from .errors import EmptyIntersectionError, NoSourceError, ValidationError
from .grids import VectorField, as_mask, check_same_shape, pixel_coords
from .inverse import SUPPORT_SCALE, sobel_divergence, sobel_x, sobel_y

log = logging.getLogger(__name__)

DEFAULT_LINE_THRESHOLD = 0.05
DEFAULT_SOURCE_THRESHOLD = 1.0
DEFAULT_STEP = 0.5
DEFAULT_MAX_STEPS = 500
DEFAULT_EPS = 2.0
DEFAULT_MIN_SAMPLES = 4
CONVERGED = 1e-3


# --------------------------------------------------------------------------
# directions


@dataclass(frozen=True)
class AngleGrid:
    """Angles in (-pi, pi] where ``defined`` is set; NaN elsewhere."""

    theta: np.ndarray
    defined: np.ndarray

    def __post_init__(self):
        check_same_shape(self.theta, self.defined)


def direction_angles(field: VectorField, boundary) -> AngleGrid:
    m = as_mask(boundary)
    check_same_shape(field.vx, m)
    theta = np.arctan2(field.vy, field.vx)
    theta[theta == -np.pi] = np.pi
    return AngleGrid(np.where(m, theta, np.nan), m.copy())


def wrap_angle(a):
    """Map angles to [-pi, pi)."""
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


def angle_rmse(pred: AngleGrid, gt: AngleGrid, return_coverage: bool = False):
    """RMSE in degrees of the shortest-arc difference over commonly defined pixels.

    Coverage is the common pixel count over the ground-truth pixel count.
    """
    check_same_shape(pred.theta, gt.theta)
    both = pred.defined & gt.defined
    n = int(both.sum())
    if n == 0:
        raise EmptyIntersectionError("no pixel is defined in both angle grids")
    d = wrap_angle(pred.theta[both] - gt.theta[both])
    rmse = float(np.degrees(np.sqrt(np.mean(d * d))))
    coverage = n / max(1, int(gt.defined.sum()))
    if coverage < 1.0:
        log.info("angle_rmse over %d pixels (coverage %.3f)", n, coverage)
    return (rmse, coverage) if return_coverage else rmse


# --------------------------------------------------------------------------
# straight lines


def orientation_change(field: VectorField) -> np.ndarray:
    """Summed absolute 3x3 Sobel responses of ``|vx|`` and ``|vy|``.

    Absolute components make the two sides of a boundary agree, so the
    response only measures how the orientation varies.
    """
    ax = np.abs(field.vx)
    ay = np.abs(field.vy)
    return np.abs(sobel_x(ax)) + np.abs(sobel_y(ax)) + np.abs(sobel_x(ay)) + np.abs(sobel_y(ay))


def line_proposals(field: VectorField, boundary, t: float = DEFAULT_LINE_THRESHOLD) -> np.ndarray:
    """Boundary pixels whose orientation change is below ``t``."""
    m = as_mask(boundary)
    check_same_shape(field.vx, m)
    return m & (orientation_change(field) < t)


# --------------------------------------------------------------------------
# superpixels


@dataclass(frozen=True)
class SuperpixelMap:
    labels: np.ndarray
    centroid_regions: tuple[np.ndarray, ...]
    n_clusters: int
    final_positions: np.ndarray
    exited: np.ndarray

    @property
    def n_labels(self) -> int:
        return len(self.centroid_regions) + self.n_clusters


def source_divergence(field: VectorField) -> np.ndarray:
    """Divergence at original resolution with the calibrated kernel scale."""
    return sobel_divergence(field, SUPPORT_SCALE)


def _sample(field: VectorField, pts: np.ndarray) -> np.ndarray:
    coords = [pts[:, 1], pts[:, 0]]
    vx = ndi.map_coordinates(field.vx, coords, order=1, mode="nearest")
    vy = ndi.map_coordinates(field.vy, coords, order=1, mode="nearest")
    return np.column_stack([vx, vy])


def advect(field: VectorField, points: np.ndarray, max_steps: int = DEFAULT_MAX_STEPS, step_size: float = DEFAULT_STEP):
    """Move ``(x, y)`` points against the field with bilinear sampling.

    A point stops once its displacement falls below 1e-3 px or once it
    leaves ``[-0.5, W - 0.5] x [-0.5, H - 0.5]``.  Returns the final
    positions and the exited flags.
    """
    h, w = field.shape
    pts = np.array(points, dtype=np.float64, copy=True)
    active = np.ones(len(pts), dtype=bool)
    exited = np.zeros(len(pts), dtype=bool)
    for _ in range(max_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        move = -step_size * _sample(field, pts[idx])
        pts[idx] += move
        out = (pts[idx, 0] < -0.5) | (pts[idx, 0] > w - 0.5) | (pts[idx, 1] < -0.5) | (pts[idx, 1] > h - 0.5)
        still = np.hypot(move[:, 0], move[:, 1]) < CONVERGED
        exited[idx[out]] = True
        active[idx[out | still]] = False
    return pts, exited


def _cluster_exits(pos: np.ndarray, eps: float, min_samples: int) -> np.ndarray:
    """DBSCAN labels for exited points; noise joins the nearest cluster."""
    lab = DBSCAN(eps=eps, min_samples=min_samples).fit_predict(pos)
    noise = lab < 0
    if noise.all():
        return np.zeros(len(pos), dtype=np.int64)
    if noise.any():
        _, j = cKDTree(pos[~noise]).query(pos[noise])
        lab[noise] = lab[~noise][j]
    return lab.astype(np.int64)


def superpixels(
    field: VectorField,
    max_steps: int = DEFAULT_MAX_STEPS,
    step_size: float = DEFAULT_STEP,
    source_threshold: float = DEFAULT_SOURCE_THRESHOLD,
    eps: float = DEFAULT_EPS,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> SuperpixelMap:
    """Group pixels by where they flow when moved against the field.

    Candidate centroid regions are the 8-connected components of divergence
    above ``source_threshold``.  Every pixel is advected and assigned to the
    candidate with the nearest pixel; candidates that receive no pixel are
    dropped.  Pixels that leave the image are clustered on their exit
    positions and appended as extra labels after the regions.
    """
    if max_steps < 0 or not step_size > 0:
        raise ValidationError("max_steps must be >= 0 and step_size > 0")
    h, w = field.shape
    div = source_divergence(field)
    comp, n_regions = ndi.label(div > source_threshold, structure=np.ones((3, 3), dtype=bool))
    if n_regions == 0:
        raise NoSourceError(f"no pixel has divergence above {source_threshold}")

    coords = pixel_coords((h, w)).reshape(-1, 2)
    flat = comp.ravel()
    final, exited = advect(field, coords, max_steps, step_size)
    labels = np.full(h * w, -1, dtype=np.int64)

    region_px = np.flatnonzero(flat > 0)
    inside = np.flatnonzero(~exited)
    if inside.size:
        _, j = cKDTree(coords[region_px]).query(final[inside])
        labels[inside] = flat[region_px[j]] - 1
    # regions nothing flows into are discretisation ridges, not centroids
    used = np.unique(labels[inside]) if inside.size else np.zeros(0, dtype=np.int64)
    remap = np.full(n_regions, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    labels[inside] = remap[labels[inside]]
    n_kept = len(used)

    n_clusters = 0
    gone = np.flatnonzero(exited)
    if gone.size:
        cl = _cluster_exits(final[gone], eps, min_samples)
        _, cl = np.unique(cl, return_inverse=True)
        labels[gone] = n_kept + cl
        n_clusters = int(cl.max()) + 1

    regions = tuple(np.argwhere(comp == k + 1) for k in used)
    return SuperpixelMap(
        labels=labels.reshape(h, w),
        centroid_regions=regions,
        n_clusters=n_clusters,
        final_positions=final.reshape(h, w, 2),
        exited=exited.reshape(h, w),
    )
