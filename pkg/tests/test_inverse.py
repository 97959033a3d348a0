from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage as ndi

from vectransform import synthetic
from vectransform.field_core import dt_from_mask, vt_from_labels, vt_from_mask
from vectransform.grids import BoundaryImage, VectorField
from vectransform.inverse import (
    SUPPORT_SCALE,
    binarize,
    collapse_to_original,
    divergence,
    extract_boundary,
    invert_field,
    pixel_divergence,
    upsample_support,
)

unit = st.floats(-1, 1, allow_nan=False)


def fields(max_side=12):
    shape = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shape.flatmap(lambda s: st.tuples(arrays(np.float64, s, elements=unit), arrays(np.float64, s, elements=unit))).map(
        lambda p: VectorField(*p)
    )


def half_plane_field(h=8, w=8, split=4):
    vx = np.where(np.arange(w) < split, 1.0, -1.0)[None, :].repeat(h, axis=0)
    return VectorField(vx, np.zeros_like(vx))


def ring(radius=20.0, shape=(64, 64)):
    d = synthetic.disk(shape, radius=radius).astype(bool)
    # 4-connected inner contour: disk pixels with any 8-neighbour outside
    return d & ~ndi.binary_erosion(d, np.ones((3, 3), bool)), d


def test_upsample_1x1():
    s = upsample_support(VectorField([[1.0]], [[0.0]]))
    assert s.shape == (2, 2)
    assert s.vx.tolist() == [[1, 0], [0, 0]] and not s.vy.any()


def test_upsample_2x2_positions():
    s = upsample_support(VectorField(np.ones((2, 2)), np.ones((2, 2))))
    assert s.shape == (4, 4)
    assert sorted(map(tuple, np.argwhere(s.vx != 0))) == [(0, 0), (0, 2), (2, 0), (2, 2)]


@given(fields())
def test_upsample_preserves_energy_and_values(f):
    s = upsample_support(f)
    assert np.sum(s.norm() ** 2) == pytest.approx(np.sum(f.norm() ** 2))
    assert np.array_equal(s.vx[::2, ::2], f.vx)
    mask = np.ones(s.shape, bool)
    mask[::2, ::2] = False
    assert not s.vx[mask].any() and not s.vy[mask].any()


def test_calibration_ideal_boundary():
    div = divergence(upsample_support(half_plane_field()))
    assert np.allclose(div[:, 7], -2.0, atol=1e-6)
    far = np.delete(div, 7, axis=1)
    assert np.abs(far).max() < 1e-6
    assert SUPPORT_SCALE == 0.5


def test_constant_field_zero_divergence():
    f = VectorField(np.ones((8, 8)), np.zeros((8, 8)))
    assert np.abs(divergence(upsample_support(f))).max() < 1e-12
    assert np.abs(pixel_divergence(f)).max() < 1e-12


@given(fields(), fields(), st.floats(-3, 3), st.floats(-3, 3))
def test_divergence_is_linear(f, g, a, b):
    if f.shape != g.shape:
        return
    fs, gs = upsample_support(f), upsample_support(g)
    combo = VectorField(a * fs.vx + b * gs.vx, a * fs.vy + b * gs.vy)
    assert np.allclose(divergence(combo), a * divergence(fs) + b * divergence(gs), atol=1e-9)


@given(fields())
def test_lattice_positions_have_zero_divergence(f):
    div = divergence(upsample_support(f))
    assert not div[::2, ::2].any()


@given(fields())
def test_strength_non_negative_and_band_thin(f):
    b, m = invert_field(f)
    assert np.all(b.strength >= 0)
    assert np.array_equal(m, b.strength > 0)


def test_extract_boundary_arithmetic():
    div = np.zeros((4, 4))
    div[1, 0] = -2.0
    b = extract_boundary(div)
    assert b.resolution == "support"
    assert b.strength[1, 0] == 1.0 and b.strength.sum() == 1.0
    assert not extract_boundary(np.zeros((6, 6))).strength.any()


def test_extract_boundary_ideal_line():
    b = extract_boundary(divergence(upsample_support(half_plane_field())))
    # the last odd row lies past the image edge
    assert np.all(b.strength[:-1, 7] == 1.0)
    assert b.strength.sum() == b.strength.shape[0] - 1


def test_extract_boundary_drops_phantom_edge():
    div = np.full((6, 6), -3.0)
    s = extract_boundary(div).strength
    assert not s[-1].any() and not s[:, -1].any() and not s[::2, ::2].any()


def test_collapse_single_support_pixel():
    s = np.zeros((4, 4))
    s[0, 1] = 1.0  # (x=1, y=0): one odd coordinate
    out = collapse_to_original(BoundaryImage(s, "support"))
    assert out.resolution == "original"
    assert out.strength.tolist() == [[1.0, 1.0], [0.0, 0.0]]


def test_collapse_averages():
    s = np.zeros((4, 4))
    s[1, 1] = 2.0  # odd-odd: four lattice neighbours
    s[0, 1] = 1.0
    out = collapse_to_original(BoundaryImage(s, "support")).strength
    assert out[0, 0] == pytest.approx(1.5) and out[0, 1] == pytest.approx(1.5)
    assert out[1, 0] == pytest.approx(2.0) and out[1, 1] == pytest.approx(2.0)
    assert not collapse_to_original(BoundaryImage(np.zeros((6, 6)), "support")).strength.any()


def test_collapse_ideal_line_two_columns():
    b, m = invert_field(half_plane_field())
    assert np.array_equal(np.flatnonzero(m.any(axis=0)), [3, 4])
    assert np.all(b.strength[:, 3:5] == 1.0)


def test_binarize_strict_positivity():
    b = BoundaryImage(np.array([[0.0, 0.9, 1.1]]))
    assert binarize(b).tolist() == [[False, True, True]]
    assert not binarize(BoundaryImage(np.zeros((3, 3)))).any()


def test_negative_strength_rejected():
    with pytest.raises(ValueError):
        BoundaryImage(np.array([[-0.1]]))


def test_disk_centre_is_source():
    m, _ = ring(20.0)
    div = divergence(upsample_support(vt_from_mask(m)))
    c = 2 * 31 + 1
    assert div[c - 1 : c + 2, c - 1 : c + 2].max() > 0
    # the support ring is at most one support pixel thick
    assert np.abs(np.hypot(*(np.argwhere(div < -1) - c).T) - 2 * 19.5).max() < 3


@pytest.mark.xfail(strict=True, reason="staircase steps of a mask ring leave cracks near -0.71 on the support raster")
def test_disk_support_ring_closed():
    m, _ = ring(20.0)
    div = divergence(upsample_support(vt_from_mask(m)))
    # With odd-odd vertices blocked, moving between lattice pixels means
    # crossing a crack, so a closed ring cuts every centre-to-corner path.
    walls = div < -1
    walls[1::2, 1::2] = True
    lab, _ = ndi.label(~walls)
    assert lab[62, 62] != lab[0, 0]


@pytest.mark.parametrize("radius", [7.0, 12.5, 20.0])
def test_disk_pipeline_closed_ring(radius):
    m, d = ring(radius)
    _, mask = invert_field(vt_from_mask(m))
    assert np.all(mask[m])
    assert dt_from_mask(m)[mask].max() <= 1.0
    # closed: interior and exterior are separate 4-components of the complement
    lab, n = ndi.label(~mask)
    assert n >= 2 and lab[31, 31] != lab[0, 0]


def test_round_trip_small_suite():
    for lab in synthetic.label_suite(9):
        f, band = vt_from_labels(lab)
        _, mask = invert_field(f)
        assert dt_from_mask(band)[mask].max() <= 1.0
        assert dt_from_mask(mask)[band].max() <= 1.0


def test_pixel_divergence_straight_line():
    div = pixel_divergence(half_plane_field(8, 12, 6))
    assert np.allclose(div[:, 5:7], -1.0)
    assert np.allclose(np.delete(div, [5, 6], axis=1), 0.0)


def test_tie_pixels_have_non_negative_divergence():
    from vectransform.field_core import nearest_boundary_map

    for lab in synthetic.label_suite(6):
        m = synthetic.thin_boundary(lab)
        ties = nearest_boundary_map(m).tie_count > 1
        div = divergence(upsample_support(vt_from_mask(m)))
        assert ties.any()
        assert np.all(div[::2, ::2][ties] >= 0)
