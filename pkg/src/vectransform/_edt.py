"""Compiled kernels for the exact Euclidean feature transform.

Distances come from the two-pass lower-envelope method (column scan, then a
lower envelope of parabolas per row).  Squared distances between pixel
centres are integers, so the envelope is evaluated in integer arithmetic and
equidistant sets are found by exact equality.
"""

from __future__ import annotations

import numpy as np
from numba import njit  # type: ignore[import-untyped]

_INF = np.int64(1) << np.int64(40)


@njit(cache=True)
def _column_distance(mask):
    h, w = mask.shape
    g = np.empty((h, w), dtype=np.int64)
    for x in range(w):
        d = _INF
        for y in range(h):
            if mask[y, x]:
                d = 0
            elif d < _INF:
                d += 1
            g[y, x] = d
        d = _INF
        for y in range(h - 1, -1, -1):
            if mask[y, x]:
                d = 0
            elif d < _INF:
                d += 1
            if d < g[y, x]:
                g[y, x] = d
    return g


@njit(cache=True)
def _row_envelope(g):
    h, w = g.shape
    d2 = np.empty((h, w), dtype=np.int64)
    v = np.empty(w, dtype=np.int64)
    z = np.empty(w + 1, dtype=np.float64)
    f = np.empty(w, dtype=np.int64)
    for y in range(h):
        for x in range(w):
            gx = g[y, x]
            f[x] = gx * gx if gx < _INF else -1
        k = -1
        for q in range(w):
            if f[q] < 0:
                continue
            if k < 0:
                k = 0
                v[0] = q
                z[0] = -np.inf
                z[1] = np.inf
                continue
            p = v[k]
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * (q - p))
            # z[0] is -inf, so k never drops below 0
            while s <= z[k]:
                k -= 1
                p = v[k]
                s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * (q - p))
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
        j = 0
        for x in range(w):
            while z[j + 1] < x:
                j += 1
            p = v[j]
            d2[y, x] = (x - p) * (x - p) + f[p]
    return d2


@njit(cache=True)
def _equidistant_sets(mask, g, d2):
    """Enumerate every boundary pixel at exactly the minimum distance.

    Any such pixel lies in some column x' at vertical offset g[y, x'] (the
    column minimum), so scanning columns within the distance suffices.
    """
    h, w = mask.shape
    nearest = np.empty((h, w, 2), dtype=np.int64)
    target = np.empty((h, w, 2), dtype=np.float64)
    ties = np.empty((h, w), dtype=np.int64)
    for y in range(h):
        for x in range(w):
            dd = d2[y, x]
            r = np.int64(np.sqrt(np.float64(dd)))
            while (r + 1) * (r + 1) <= dd:
                r += 1
            lo = max(0, x - r)
            hi = min(w - 1, x + r)
            count = 0
            sx = 0.0
            sy = 0.0
            bx = -1
            by = -1
            for xp in range(lo, hi + 1):
                gg = g[y, xp]
                if gg >= _INF:
                    continue
                dx = xp - x
                if dx * dx + gg * gg != dd:
                    continue
                for side in range(2 if gg > 0 else 1):
                    yp = y - gg if side == 0 else y + gg
                    if yp < 0 or yp >= h or not mask[yp, xp]:
                        continue
                    count += 1
                    sx += xp
                    sy += yp
                    if by < 0 or yp < by or (yp == by and xp < bx):
                        bx = xp
                        by = yp
            ties[y, x] = count
            nearest[y, x, 0] = bx
            nearest[y, x, 1] = by
            mx = sx / count
            my = sy / count
            # averaging only merges points seen within a right angle; wider
            # spreads are distinct boundaries and one point is picked
            ox = mx - x
            oy = my - y
            if 2.0 * (ox * ox + oy * oy) < dd - 1e-9:
                mx = bx
                my = by
            target[y, x, 0] = mx
            target[y, x, 1] = my
    return nearest, target, ties


def feature_transform(mask: np.ndarray):
    """Return ``(d2, nearest, target, ties)`` for a non-empty boolean mask."""
    m = np.ascontiguousarray(mask, dtype=np.bool_)
    g = _column_distance(m)
    d2 = _row_envelope(g)
    nearest, target, ties = _equidistant_sets(m, g, d2)
    return d2, nearest, target, ties
