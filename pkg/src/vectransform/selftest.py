"""Quick built-in checks run by ``vectransform selftest``."""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from . import formats, synthetic
from .field_core import boundary_from_labels, brute_force_nearest, dt_from_mask, nearest_boundary_map, vt_from_labels
from .grids import VectorField
from .inverse import divergence, invert_field, upsample_support


def check_oracle(rng, n: int = 10, shape=(64, 64)) -> bool:
    for _ in range(n):
        m = rng.random(shape) < 0.05
        m[rng.integers(shape[0]), rng.integers(shape[1])] = True
        if np.max(np.abs(nearest_boundary_map(m).distance - brute_force_nearest(m).distance)) > 1e-9:
            return False
    return True


def check_round_trip(n: int = 12) -> bool:
    for lab in synthetic.label_suite(n):
        field, band = vt_from_labels(lab)
        _, mask = invert_field(field)
        if not mask.any():
            return False
        if max(dt_from_mask(band)[mask].max(), dt_from_mask(mask)[band].max()) > 1.0:
            return False
    return True


def check_calibration() -> bool:
    vx = np.where(np.arange(8) < 4, 1.0, -1.0)[None, :].repeat(8, axis=0)
    div = divergence(upsample_support(VectorField(vx, np.zeros_like(vx))))
    return bool(np.allclose(div[:, 7], -2.0, atol=1e-6) and np.allclose(np.delete(div, 7, axis=1), 0.0, atol=1e-6))


def check_io(rng) -> bool:
    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        m = rng.random((17, 23)) < 0.3
        for name in ("m.pgm", "m.png"):
            formats.write_mask(d / name, m)
            if not np.array_equal(formats.read_mask(d / name), m):
                return False
        lab = synthetic.voronoi((32, 32), 5, seed=int(rng.integers(1 << 30)))
        formats.write_labels(d / "l.png", lab * 1000)
        if not np.array_equal(formats.read_labels(d / "l.png"), lab * 1000):
            return False
        f = VectorField(rng.uniform(-1, 1, (9, 11)).astype(np.float32), rng.uniform(-1, 1, (9, 11)).astype(np.float32))
        formats.write_field(d / "f.vtf", f)
        g = formats.read_field(d / "f.vtf")
        if not (np.array_equal(f.vx, g.vx) and np.array_equal(f.vy, g.vy)):
            return False
        if not np.array_equal(boundary_from_labels(lab), boundary_from_labels(formats.read_labels(d / "l.png") // 1000)):
            return False
    return True


def run(seed: int = 0, verbose: bool = True) -> bool:
    rng = np.random.default_rng(seed)
    checks = [
        ("exact distance transform vs brute force", lambda: check_oracle(rng)),
        ("divergence calibration", check_calibration),
        ("label map -> field -> boundary round trip", check_round_trip),
        ("file format round trips", lambda: check_io(rng)),
    ]
    ok = True
    for name, fn in checks:
        res = fn()
        ok &= res
        if verbose:
            print(f"{'ok  ' if res else 'FAIL'} {name}")
    return ok
