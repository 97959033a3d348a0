from __future__ import annotations

import struct

import numpy as np
import pytest
from matplotlib.colors import rgb_to_hsv

from vectransform import formats, synthetic, viz
from vectransform.cli import main
from vectransform.errors import (
    BadMagicError,
    DimensionOverflowError,
    MalformedHeaderError,
    NonFiniteError,
    TruncatedPayloadError,
)
from vectransform.field_core import dt_from_mask, vt_from_labels, vt_from_mask
from vectransform.grids import VectorField


@pytest.mark.parametrize("suffix", [".pgm", ".png"])
def test_mask_round_trip(tmp_path, rng, suffix):
    for i in range(100):
        shape = tuple(int(v) for v in rng.integers(1, 40, 2))
        m = rng.random(shape) < rng.uniform(0, 1)
        p = tmp_path / f"m{i}{suffix}"
        formats.write_mask(p, m)
        assert np.array_equal(formats.read_mask(p), m)


def test_empty_mask_reads(tmp_path):
    p = tmp_path / "e.pgm"
    formats.write_mask(p, np.zeros((5, 7), bool))
    m = formats.read_mask(p)
    assert m.shape == (5, 7) and not m.any()


def test_pgm_size_mismatch(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P5\n4 4\n255\n" + bytes(10))
    with pytest.raises(MalformedHeaderError):
        formats.read_mask(p)
    p.write_bytes(b"P5\n4 4\n255\n" + bytes(17))
    with pytest.raises(MalformedHeaderError):
        formats.read_mask(p)


def test_pgm_header_errors(tmp_path):
    p = tmp_path / "bad.pgm"
    for body in (b"P2\n1 1\n255\n0", b"P5\n4", b"P5\nx 4\n255\n", b"P5\n1 1\n0\n\x00"):
        p.write_bytes(body)
        with pytest.raises(MalformedHeaderError):
            formats.read_mask(p)
    p.write_bytes(b"P5\n100000 2\n255\n")
    with pytest.raises(DimensionOverflowError):
        formats.read_mask(p)


def test_pgm_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n2 1\n# depth\n255\n\x00\x07")
    assert formats.read_mask(p).tolist() == [[False, True]]


def test_labels_16_bit(tmp_path):
    lab = np.array([[0, 1], [300, 65535]])
    for name in ("l.png", "l.pgm"):
        formats.write_labels(tmp_path / name, lab)
        assert np.array_equal(formats.read_labels(tmp_path / name), lab)


def test_field_round_trip_bitwise(tmp_path, rng):
    f = VectorField(*rng.uniform(-1, 1, (2, 13, 17)).astype(np.float32))
    p = tmp_path / "f.vtf"
    formats.write_field(p, f)
    g = formats.read_field(p)
    assert g.vx.astype(np.float32).tobytes() == f.vx.astype(np.float32).tobytes()
    assert g.vy.astype(np.float32).tobytes() == f.vy.astype(np.float32).tobytes()
    data = p.read_bytes()
    assert data[:4] == b"VTF1" and struct.unpack_from("<III", data, 4) == (2, 17, 13)
    formats.write_field(tmp_path / "g.vtf", g)
    assert (tmp_path / "g.vtf").read_bytes() == data


def test_field_errors(tmp_path, rng):
    p = tmp_path / "f.vtf"
    formats.write_field(p, VectorField(np.zeros((3, 3)), np.zeros((3, 3))))
    data = p.read_bytes()
    q = tmp_path / "x.vtf"
    q.write_bytes(b"VTF2" + data[4:])
    with pytest.raises(BadMagicError):
        formats.read_field(q)
    q.write_bytes(data[:-4])
    with pytest.raises(TruncatedPayloadError):
        formats.read_field(q)
    q.write_bytes(data[:10])
    with pytest.raises(TruncatedPayloadError):
        formats.read_field(q)
    q.write_bytes(data[:16] + struct.pack("<f", float("nan")) + data[20:])
    with pytest.raises(NonFiniteError):
        formats.read_field(q)
    with pytest.raises(NonFiniteError):
        formats.write_planes(q, np.full((2, 2), np.inf))


def test_single_channel_planes(tmp_path):
    p = tmp_path / "a.vtf"
    formats.write_planes(p, np.arange(6.0).reshape(2, 3))
    assert formats.read_planes(p).shape == (1, 2, 3)
    with pytest.raises(MalformedHeaderError):
        formats.read_field(p)


def test_viz_constant_field_uniform_hue():
    img = viz.field_rgb(VectorField(np.ones((5, 5)), np.zeros((5, 5))))
    assert np.all(img == img[0, 0]) and img[0, 0].tolist() == [255, 0, 0]


def test_viz_point_hue_wheel():
    m = np.zeros((65, 65), bool)
    m[32, 32] = True
    hue = rgb_to_hsv(viz.field_rgb(vt_from_mask(m)) / 255.0)[..., 0]
    yy, xx = np.mgrid[:65, :65]
    ring = np.abs(np.hypot(yy - 32, xx - 32) - 25) < 1
    hist, _ = np.histogram(hue[ring], bins=12, range=(0, 1))
    assert hist.min() >= 0.7 * hist.mean()


def test_viz_zero_divergence_mid_colormap(tmp_path):
    img = viz.visualize(np.zeros((4, 4)), tmp_path / "d.png")
    assert np.all(img == img[0, 0])
    assert abs(int(img[0, 0, 0]) - int(img[0, 0, 2])) < 20  # near-white centre of RdBu
    assert (tmp_path / "d.png").exists()


def test_viz_quiver_and_boundary(tmp_path):
    f = VectorField(np.ones((32, 32)), np.zeros((32, 32)))
    img = viz.visualize(f, tmp_path / "q.png", quiver_stride=8)
    assert (img == 0).all(axis=-1).any()
    g = viz.visualize(np.eye(4, dtype=bool), tmp_path / "b.png")
    assert g.tolist() == (np.eye(4) * 255).astype(int).tolist()


# --------------------------------------------------------------------------
# CLI


def run(*argv) -> int:
    return main([str(a) for a in argv])


def test_cli_transform_invert_round_trip(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    lab = synthetic.label_suite(1)[0]
    formats.write_labels("in.png", lab)
    assert run("transform", "--labels", "in.png", "--out", "f.vtf", "--band-out", "band.pgm") == 0
    assert run("invert", "f.vtf") == 0
    mask = formats.read_mask("f_mask.pgm")
    band = vt_from_labels(lab)[1]
    assert np.array_equal(formats.read_mask("band.pgm"), band)
    assert max(dt_from_mask(band)[mask].max(), dt_from_mask(mask)[band].max()) <= 1.0
    assert formats.read_planes("f_strength.vtf").shape == (1, 64, 64)


def test_cli_transform_mask(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    m = synthetic.line_mask((20, 20), (2, 2), (17, 12))
    formats.write_mask("m.pgm", m)
    assert run("transform", "--mask", "m.pgm", "--out", "f.vtf") == 0
    f = formats.read_field("f.vtf")
    assert np.allclose(f.vx, vt_from_mask(m).vx, atol=1e-6)


def test_cli_eval_self(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    formats.write_mask("a.pgm", synthetic.thin_boundary(synthetic.label_suite(1)[0]))
    assert run("eval", "--pred", "a.pgm", "--gt", "a.pgm", "--out", "r.csv") == 0
    header, values = (tmp_path / "r.csv").read_text().splitlines()
    row = dict(zip(header.split(","), values.split(",")))
    assert float(row["assd"]) == 0.0 and float(row["ods_F"]) == 1.0 and float(row["ois_F"]) == 1.0
    assert run("eval", "--pred", "a.pgm", "--gt", "a.pgm", "--format", "kv") == 0
    assert "assd=0.000000" in capsys.readouterr().out


def test_cli_eval_deterministic_across_workers(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    preds, gts = [], []
    for i, lab in enumerate(synthetic.label_suite(4)):
        truth, pred = synthetic.thin_boundary(lab), synthetic.thin_boundary(np.roll(lab, 1, axis=1))
        formats.write_mask(f"g{i}.pgm", truth)
        formats.write_mask(f"p{i}.pgm", pred)
        preds.append(f"p{i}.pgm")
        gts.append(f"g{i}.pgm")
    assert run("eval", "--pred", *preds, "--gt", *gts, "--out", "a.csv") == 0
    assert run("eval", "--pred", *preds, "--gt", *gts, "--out", "b.csv", "--workers", "4") == 0
    assert run("eval", "--pred", *preds, "--gt", *gts, "--out", "c.csv") == 0
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()


def test_cli_profile_and_derived(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    lab = synthetic.rectangles((64, 64), 2, seed=0)
    f, band = vt_from_labels(lab)
    formats.write_field("f.vtf", f)
    formats.write_mask("band.pgm", band)
    assert run("profile", "--gt", "band.pgm", "--kind", "dt", "--max-distance", "3") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "distance,mean,stddev,count" and lines[1].startswith("0.000000,0.000000,0.000000,")
    assert run("profile", "--gt", "band.pgm", "--values", "f.vtf", "--out", "p.csv") == 0
    assert run("lines", "--field", "f.vtf", "--boundary", "band.pgm", "--out", "l.pgm") == 0
    assert formats.read_mask("l.pgm").any()
    assert run("superpixels", "--field", "f.vtf", "--out", "sp.png") == 0
    assert formats.read_labels("sp.png").max() >= 2
    assert run("direction", "--field", "f.vtf", "--boundary", "band.pgm", "--out", "a.vtf") == 0
    assert run("direction", "--field", "f.vtf", "--boundary", "band.pgm", "--compare", "a.vtf") == 0
    stats = dict(kv.split("=") for kv in capsys.readouterr().out.split())
    # angle files hold float32, so the self comparison is zero up to rounding
    assert float(stats["angle_rmse_deg"]) < 1e-4 and float(stats["coverage"]) == 1.0
    assert run("viz", "f.vtf", "--out", "v.png", "--quiver", "8") == 0
    assert run("viz", "f.vtf", "--out", "d.png", "--divergence") == 0


def test_cli_selftest():
    assert run("selftest", "-q") == 0


def test_cli_exit_codes(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as e:
        run("nonsense")
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        run("transform")
    assert e.value.code == 1
    assert run("invert", "missing.vtf") == 2
    (tmp_path / "bad.vtf").write_bytes(b"VTF2" + bytes(12))
    assert run("invert", "bad.vtf") == 2
    formats.write_mask("empty.pgm", np.zeros((8, 8), bool))
    assert run("transform", "--mask", "empty.pgm", "--out", "f.vtf") == 1
    assert run("transform", "--out", "f.vtf") == 1
    assert run("eval", "--pred", "empty.pgm", "--gt", "empty.pgm", "--tolerance-fraction", "0") == 1


def test_cli_refuses_escaping_output(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "out").mkdir()
    formats.write_mask("m.pgm", synthetic.line_mask((16, 16), (0, 0), (15, 15)))
    assert run("transform", "--mask", "m.pgm", "--out", "../f.vtf", "--out-dir", "out") == 1
    assert run("transform", "--mask", "m.pgm", "--out", str(tmp_path / "g.vtf"), "--out-dir", "out") == 1
    assert not (tmp_path / "f.vtf").exists() and not (tmp_path / "g.vtf").exists()
    assert run("transform", "--mask", "m.pgm", "--out", "sub/f.vtf", "--out-dir", "out") == 0
    assert (tmp_path / "out" / "sub" / "f.vtf").exists()


def test_cli_config_precedence(tmp_path, monkeypatch):
    from vectransform.cli import build_config, build_parser

    monkeypatch.chdir(tmp_path)
    (tmp_path / "run.cfg").write_text("# comment\ntolerance_fraction = 0.01\nn-thresholds = 9  # short ladder\n")
    args = build_parser().parse_args(["selftest", "--config", "run.cfg", "--n-thresholds", "19"])
    cfg = build_config(args)
    assert cfg.tolerance_fraction == 0.01 and cfg.n_thresholds == 19
    (tmp_path / "bad.cfg").write_text("workers = many\n")
    assert run("selftest", "--config", "bad.cfg") == 1
    (tmp_path / "bad.cfg").write_text("colour = red\n")
    assert run("selftest", "--config", "bad.cfg") == 1
