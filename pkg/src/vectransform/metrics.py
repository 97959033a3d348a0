"""Boundary evaluation: surface distances, correspondence F-measure, profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage as ndi
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial import cKDTree

from .errors import EmptyMaskError, LengthMismatchError, ValidationError
from .field_core import dt_from_mask
from .grids import BoundaryImage, VectorField, as_mask, check_same_shape

MATCHING_SOLVER = "maximum-cardinality bipartite matching (scipy csgraph, augmenting paths)"
# distances are pixel-centre Euclidean; tiny slack keeps d == tolerance inside
_TOL_EPS = 1e-9


@dataclass(frozen=True)
class MatchResult:
    true_positives: int
    false_positives: int
    false_negatives: int
    tolerance: float

    @property
    def precision(self) -> float:
        n = self.true_positives + self.false_positives
        return self.true_positives / n if n else 0.0

    @property
    def recall(self) -> float:
        n = self.true_positives + self.false_negatives
        return self.true_positives / n if n else 0.0

    @property
    def f(self) -> float:
        return f_measure(self.precision, self.recall)


@dataclass(frozen=True)
class PRF:
    R: float
    P: float
    F: float
    threshold: float | None = None


@dataclass
class MetricReport:
    asd_R: float | None = None
    asd_P: float | None = None
    assd: float | None = None
    ods: PRF | None = None
    ois: PRF | None = None
    meta: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, str]]:
        """Flat (key, value) pairs in a fixed order, for CSV / key=value output."""
        out: list[tuple[str, str]] = []
        for k in ("asd_R", "asd_P", "assd"):
            v = getattr(self, k)
            if v is not None:
                out.append((k, _fmt(v)))
        for name in ("ods", "ois"):
            blk = getattr(self, name)
            if blk is None:
                continue
            if blk.threshold is not None:
                out.append((f"{name}_threshold", _fmt(blk.threshold)))
            out += [(f"{name}_R", _fmt(blk.R)), (f"{name}_P", _fmt(blk.P)), (f"{name}_F", _fmt(blk.F))]
        out += [(k, str(v)) for k, v in sorted(self.meta.items())]
        return out


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def f_measure(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


# --------------------------------------------------------------------------
# surface distances


def surface_distances(pred, gt) -> tuple[float, float, float]:
    """Return ``(asd_P, asd_R, assd)`` between two boundary masks.

    Empty masks raise :class:`EmptyMaskError`; an empty prediction has no
    defined precision distance and is never scored as 0.
    """
    p = as_mask(pred)
    g = as_mask(gt)
    check_same_shape(p, g)
    if not p.any():
        raise EmptyMaskError("prediction mask is empty; asd_P is undefined")
    if not g.any():
        raise EmptyMaskError("ground-truth mask is empty; asd_R is undefined")
    asd_p = float(dt_from_mask(g)[p].mean())
    asd_r = float(dt_from_mask(p)[g].mean())
    return asd_p, asd_r, 0.5 * (asd_p + asd_r)


# --------------------------------------------------------------------------
# correspondence


def match_boundaries(pred, gt, tolerance: float) -> MatchResult:
    """One-to-one matching of boundary pixels within ``tolerance`` pixels."""
    if not tolerance > 0:
        raise ValidationError(f"tolerance must be positive, got {tolerance}")
    p = as_mask(pred)
    g = as_mask(gt)
    check_same_shape(p, g)
    pp = np.argwhere(p)
    gg = np.argwhere(g)
    if len(pp) == 0 or len(gg) == 0:
        return MatchResult(0, len(pp), len(gg), float(tolerance))
    pairs = cKDTree(pp).query_ball_tree(cKDTree(gg), tolerance + _TOL_EPS)
    rows = np.repeat(np.arange(len(pp)), [len(c) for c in pairs])
    cols = np.fromiter((j for c in pairs for j in c), dtype=np.int64, count=len(rows))
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(len(pp), len(gg)))
    match = maximum_bipartite_matching(graph, perm_type="column")
    tp = int((match >= 0).sum())
    return MatchResult(tp, len(pp) - tp, len(gg) - tp, float(tolerance))


def threshold_ladder(n: int = 99) -> np.ndarray:
    """``n`` evenly spaced thresholds strictly inside (0, 1)."""
    if n < 1:
        raise ValidationError("threshold ladder needs at least one threshold")
    return np.arange(1, n + 1) / (n + 1)


def image_tolerance(shape: tuple[int, int], fraction: float) -> float:
    return fraction * math.hypot(*shape)


def _strength_array(b) -> np.ndarray:
    return b.strength if isinstance(b, BoundaryImage) else np.asarray(b, dtype=np.float64)


def count_table(strength, gt, thresholds, tolerance: float) -> np.ndarray:
    """(len(thresholds), 3) table of TP, FP, FN for ``strength >= t``."""
    s = _strength_array(strength)
    g = as_mask(gt)
    check_same_shape(s, g)
    out = np.empty((len(thresholds), 3), dtype=np.int64)
    for i, t in enumerate(thresholds):
        m = match_boundaries(s >= t, g, tolerance)
        out[i] = (m.true_positives, m.false_positives, m.false_negatives)
    return out


def _prf(counts) -> tuple[float, float, float]:
    tp, fp, fn = (int(c) for c in counts)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return r, p, f_measure(p, r)


def ods_ois(pred_strengths, gts, tolerance_fraction: float = 0.0025, n_thresholds: int = 99) -> MetricReport:
    """Dataset-level optimal (ODS) and per-image optimal (OIS) R/P/F.

    Strengths are expected in [0, 1] and binarised with ``>= t`` on the
    :func:`threshold_ladder`.  The match tolerance of each image is
    ``tolerance_fraction`` times its diagonal.
    """
    if len(pred_strengths) != len(gts):
        raise LengthMismatchError(f"{len(pred_strengths)} predictions vs {len(gts)} ground truths")
    if not tolerance_fraction > 0:
        raise ValidationError("tolerance_fraction must be positive")
    ts = threshold_ladder(n_thresholds)
    tables = [count_table(s, g, ts, image_tolerance(np.shape(g), tolerance_fraction)) for s, g in zip(pred_strengths, gts)]
    rep = ods_ois_from_tables(tables, n_thresholds)
    rep.meta["tolerance_fraction"] = tolerance_fraction
    return rep


def ods_ois_from_tables(tables, n_thresholds: int = 99) -> MetricReport:
    """ODS/OIS from per-image :func:`count_table` results.

    ODS sums counts over images at each threshold and picks the best F.  OIS
    picks each image's best threshold (lowest on ties) and sums those counts.
    """
    if not len(tables):
        raise ValidationError("no images to evaluate")
    ts = threshold_ladder(n_thresholds)
    total = np.sum(tables, axis=0)
    f_ods = np.array([_prf(c)[2] for c in total])
    k = int(np.argmax(f_ods))
    r, p, f = _prf(total[k])
    ods = PRF(r, p, f, float(ts[k]))

    best = np.zeros(3, dtype=np.int64)
    for tab in tables:
        f_img = np.array([_prf(c)[2] for c in tab])
        best += tab[int(np.argmax(f_img))]
    r, p, f = _prf(best)
    meta = {"solver": MATCHING_SOLVER, "n_thresholds": n_thresholds, "ois_aggregation": "counts"}
    return MetricReport(ods=ods, ois=PRF(r, p, f), meta=meta)


# --------------------------------------------------------------------------
# fields and profiles


def field_mse(gt: VectorField, pred: VectorField) -> float:
    """Mean over pixels of the squared Euclidean difference of the vectors."""
    check_same_shape(gt.vx, pred.vx)
    return float(np.mean((gt.vx - pred.vx) ** 2 + (gt.vy - pred.vy) ** 2))


@dataclass(frozen=True)
class ProfileCurve:
    distances: np.ndarray
    mean: np.ndarray
    stddev: np.ndarray
    count: np.ndarray

    def rows(self):
        for d, m, s, c in zip(self.distances, self.mean, self.stddev, self.count):
            yield float(d), float(m), float(s), int(c)


def prediction_profile(values, gt_boundary, max_distance: float, bin_width: float = 1.0, include=None) -> ProfileCurve:
    """Mean and standard deviation of ``values`` per distance-to-boundary bin.

    Pixels are binned by ``round(dt / bin_width)`` where ``dt`` is the exact
    distance to ``gt_boundary``; bins past ``max_distance`` and empty bins are
    dropped.  ``include`` optionally restricts the pixels used.
    """
    v = np.asarray(values, dtype=np.float64)
    g = as_mask(gt_boundary)
    check_same_shape(v, g)
    if not bin_width > 0:
        raise ValidationError("bin_width must be positive")
    d = dt_from_mask(g)
    sel = d <= max_distance
    if include is not None:
        sel &= as_mask(include)
    idx = np.rint(d[sel] / bin_width).astype(np.int64)
    vals = v[sel]
    nb = int(idx.max()) + 1 if idx.size else 0
    cnt = np.bincount(idx, minlength=nb)
    s1 = np.bincount(idx, weights=vals, minlength=nb)
    keep = cnt > 0
    mean = np.divide(s1, cnt, out=np.zeros(nb), where=keep)
    # two-pass variance for accuracy
    s2 = np.bincount(idx, weights=(vals - mean[idx]) ** 2, minlength=nb)
    std = np.sqrt(np.divide(s2, cnt, out=np.zeros(nb), where=keep))
    centres = np.arange(nb) * bin_width
    return ProfileCurve(centres[keep], mean[keep], std[keep], cnt[keep])


def medial_free(field: VectorField) -> np.ndarray:
    """Pixels whose 3x3 neighbourhood holds no vector at 90 degrees or more to their own.

    Such neighbourhoods straddle a medial axis (a source of the field); the
    rest lie on normals running cleanly out of the boundary.
    """
    h, w = field.shape
    px = np.pad(field.vx, 1, mode="edge")
    py = np.pad(field.vy, 1, mode="edge")
    ok = np.ones((h, w), dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            ok &= field.vx * px[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w] + field.vy * py[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w] > 0
    return ok


# --------------------------------------------------------------------------
# thickness sensitivity


def dilate(mask) -> np.ndarray:
    """One pass of 3x3 dilation (doubles a 1-2 px boundary)."""
    return ndi.binary_dilation(as_mask(mask), structure=np.ones((3, 3), dtype=bool))


@dataclass(frozen=True)
class ThicknessRow:
    name: str
    assd: float
    R: float
    P: float
    F: float


@dataclass(frozen=True)
class ThicknessReport:
    rows: tuple[ThicknessRow, ...]

    def row(self, name: str) -> ThicknessRow:
        return next(r for r in self.rows if r.name == name)

    def relative_change(self, name: str, metric: str) -> float:
        """|x(name) - x(OP)| / x(OP); infinite when the baseline is 0 and x changed."""
        base = getattr(self.row("OP"), metric)
        val = getattr(self.row(name), metric)
        if base == 0:
            return 0.0 if val == 0 else math.inf
        return abs(val - base) / abs(base)


def thickness_sensitivity(pred, gt, tolerance: float) -> ThicknessReport:
    """assd and fixed-threshold R/P/F for original (OP), thick prediction (TP)
    and thick ground truth (TG)."""
    p = as_mask(pred)
    g = as_mask(gt)
    rows = []
    for name, a, b in (("OP", p, g), ("TP", dilate(p), g), ("TG", p, dilate(g))):
        assd = surface_distances(a, b)[2]
        m = match_boundaries(a, b, tolerance)
        rows.append(ThicknessRow(name, assd, m.recall, m.precision, m.f))
    return ThicknessReport(tuple(rows))
