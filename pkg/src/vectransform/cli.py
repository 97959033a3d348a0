"""Command-line interface.

Exit codes: 0 success, 1 invalid input or usage, 2 unreadable/unwritable or
malformed files.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import derived, formats, inverse, metrics, viz
from .errors import FormatError, ValidationError
from .field_core import dt_from_mask, vt_from_labels, vt_from_mask
from .grids import BoundaryImage, VectorField

log = logging.getLogger("vectransform")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    out_dir: str = "."
    tolerance_fraction: float = 0.0025
    n_thresholds: int = 99
    line_threshold: float = derived.DEFAULT_LINE_THRESHOLD
    max_steps: int = derived.DEFAULT_MAX_STEPS
    step_size: float = derived.DEFAULT_STEP
    source_threshold: float = derived.DEFAULT_SOURCE_THRESHOLD
    dbscan_eps: float = derived.DEFAULT_EPS
    dbscan_min_samples: int = derived.DEFAULT_MIN_SAMPLES
    seed: int = 0
    workers: int = 1

    def validate(self) -> "RunConfig":
        if not self.tolerance_fraction > 0:
            raise ValidationError("tolerance_fraction must be > 0")
        if self.n_thresholds < 1:
            raise ValidationError("n_thresholds must be >= 1")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        if not self.step_size > 0 or self.max_steps < 0:
            raise ValidationError("step_size must be > 0 and max_steps >= 0")
        return self


def read_config(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    types = {f.name: f.type for f in fields(RunConfig)}
    conv = {"str": str, "float": float, "int": int}
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.replace("-", "_")
        if k not in types:
            raise ValidationError(f"{path}:{n}: unknown key {k!r}")
        try:
            out[k] = conv[types[k]](v)
        except ValueError:
            raise ValidationError(f"{path}:{n}: bad value for {k}: {v!r}") from None
    return out


def build_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = replace(cfg, **read_config(args.config))
    over = {f.name: getattr(args, f.name) for f in fields(RunConfig) if getattr(args, f.name, None) is not None}
    return replace(cfg, **over).validate()


def output_path(cfg: RunConfig, name) -> Path:
    """Resolve ``name`` under the output directory; refuse anything outside it."""
    root = Path(cfg.out_dir).resolve()
    p = Path(name)
    p = (p if p.is_absolute() else root / p).resolve()
    if p != root and root not in p.parents:
        raise ValidationError(f"output {name} lies outside the output directory {root}")
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


# --------------------------------------------------------------------------
# helpers


def _load_strength(path) -> np.ndarray:
    """Boundary strength from a 1-channel field file, or a mask image as {0, 1}."""
    if Path(path).suffix.lower() == ".vtf":
        planes = formats.read_planes(path)
        if planes.shape[0] != 1:
            raise ValidationError(f"{path}: strength files have one channel")
        return planes[0].astype(np.float64)
    return formats.read_mask(path).astype(np.float64)


def _write_table(path_or_none, header, rows, fmt: str, cfg: RunConfig) -> None:
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    else:
        for row in rows:
            buf.write(" ".join(f"{k}={v}" for k, v in zip(header, row)) + "\n")
    if path_or_none is None:
        sys.stdout.write(buf.getvalue())
    else:
        output_path(cfg, path_or_none).write_text(buf.getvalue())


# --------------------------------------------------------------------------
# subcommands


def cmd_transform(args, cfg: RunConfig) -> int:
    if (args.mask is None) == (args.labels is None):
        raise ValidationError("give exactly one of --mask or --labels")
    if args.mask is not None:
        field = vt_from_mask(formats.read_mask(args.mask))
    else:
        field, band = vt_from_labels(formats.read_labels(args.labels))
        if args.band_out:
            formats.write_mask(output_path(cfg, args.band_out), band)
    formats.write_field(output_path(cfg, args.out), field)
    return EXIT_OK


def cmd_invert(args, cfg: RunConfig) -> int:
    field = formats.read_field(args.field)
    if not field.in_range():
        raise ValidationError(f"{args.field}: components outside [-1, 1]")
    strength, mask = inverse.invert_field(field)
    prefix = args.prefix or Path(args.field).stem
    formats.write_planes(output_path(cfg, f"{prefix}_strength.vtf"), strength.strength)
    formats.write_mask(output_path(cfg, f"{prefix}_mask.pgm"), mask)
    return EXIT_OK


def _eval_pair(pred_path, gt_path, cfg: RunConfig):
    s = _load_strength(pred_path)
    g = formats.read_mask(gt_path)
    if s.shape != g.shape:
        raise ValidationError(f"{pred_path} and {gt_path} differ in size")
    asd = metrics.surface_distances(s > 0, g)
    tol = metrics.image_tolerance(g.shape, cfg.tolerance_fraction)
    table = metrics.count_table(s, g, metrics.threshold_ladder(cfg.n_thresholds), tol)
    return asd, table


def cmd_eval(args, cfg: RunConfig) -> int:
    if len(args.pred) != len(args.gt):
        raise ValidationError(f"{len(args.pred)} predictions vs {len(args.gt)} ground truths")
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(lambda pg: _eval_pair(*pg, cfg), zip(args.pred, args.gt)))
    asd = np.array([r[0] for r in results])
    rep = metrics.ods_ois_from_tables([r[1] for r in results], cfg.n_thresholds)
    rep.meta["tolerance_fraction"] = cfg.tolerance_fraction
    rep.asd_P, rep.asd_R, rep.assd = (float(v) for v in asd.mean(axis=0))
    rep.meta["images"] = len(results)
    rows = rep.rows()
    _write_table(args.out, [k for k, _ in rows], [[v for _, v in rows]], args.format, cfg)
    return EXIT_OK


def cmd_direction(args, cfg: RunConfig) -> int:
    field = formats.read_field(args.field)
    ang = derived.direction_angles(field, formats.read_mask(args.boundary))
    if args.compare:
        ref = formats.read_planes(args.compare)[0].astype(np.float64)
        gt = derived.AngleGrid(np.where(ang.defined, ref, np.nan), ang.defined)
        rmse, cov = derived.angle_rmse(ang, gt, return_coverage=True)
        print(f"angle_rmse_deg={rmse:.6f} coverage={cov:.6f}")
    if args.out:
        # undefined pixels are stored as 0; the boundary mask tells them apart
        formats.write_planes(output_path(cfg, args.out), np.where(ang.defined, ang.theta, 0.0))
    return EXIT_OK


def cmd_lines(args, cfg: RunConfig) -> int:
    field = formats.read_field(args.field)
    lines = derived.line_proposals(field, formats.read_mask(args.boundary), cfg.line_threshold)
    formats.write_mask(output_path(cfg, args.out), lines)
    return EXIT_OK


def cmd_superpixels(args, cfg: RunConfig) -> int:
    field = formats.read_field(args.field)
    sp = derived.superpixels(
        field, cfg.max_steps, cfg.step_size, cfg.source_threshold, cfg.dbscan_eps, cfg.dbscan_min_samples
    )
    formats.write_labels(output_path(cfg, args.out), sp.labels)
    log.info("%d centroid regions, %d exit clusters", len(sp.centroid_regions), sp.n_clusters)
    return EXIT_OK


def cmd_profile(args, cfg: RunConfig) -> int:
    gt = formats.read_mask(args.gt)
    if args.kind == "dt":
        values = dt_from_mask(gt)
    else:
        if args.values is None:
            raise ValidationError("--values is required unless --kind dt")
        planes = formats.read_planes(args.values)
        if args.kind == "divergence":
            if planes.shape[0] != 2:
                raise ValidationError("--kind divergence needs a 2-channel field")
            values = inverse.pixel_divergence(VectorField(planes[0], planes[1]))
        else:
            values = planes[0].astype(np.float64)
    curve = metrics.prediction_profile(values, gt, args.max_distance, args.bin_width)
    rows = [[f"{d:.6f}", f"{m:.6f}", f"{s:.6f}", str(c)] for d, m, s, c in curve.rows()]
    _write_table(args.out, ["distance", "mean", "stddev", "count"], rows, "csv", cfg)
    return EXIT_OK


def cmd_viz(args, cfg: RunConfig) -> int:
    src = Path(args.input)
    if src.suffix.lower() == ".vtf":
        planes = formats.read_planes(src)
        if planes.shape[0] == 2:
            field = VectorField(planes[0], planes[1])
            obj = inverse.pixel_divergence(field) if args.divergence else field
        elif args.boundary:
            obj = BoundaryImage(np.maximum(planes[0], 0.0))
        else:
            obj = planes[0].astype(np.float64)
    else:
        obj = formats.read_mask(src)
    viz.visualize(obj, output_path(cfg, args.out), quiver_stride=args.quiver, limit=args.limit)
    return EXIT_OK


def cmd_selftest(args, cfg: RunConfig) -> int:
    from . import selftest

    ok = selftest.run(seed=cfg.seed, verbose=not args.quiet)
    return EXIT_OK if ok else EXIT_INVALID


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration (flags override --config)")
    g.add_argument("--config", help="key=value configuration file")
    g.add_argument("--out-dir", dest="out_dir", help="directory all outputs are written under (default .)")
    g.add_argument("--tolerance-fraction", dest="tolerance_fraction", type=float, help="match tolerance as a fraction of the image diagonal (0.0025)")
    g.add_argument("--n-thresholds", dest="n_thresholds", type=int, help="threshold ladder size for ODS/OIS, k/(n+1) for k=1..n (99)")
    g.add_argument("--line-threshold", dest="line_threshold", type=float, help="line proposal threshold (0.05)")
    g.add_argument("--max-steps", dest="max_steps", type=int, help="advection steps (500)")
    g.add_argument("--step-size", dest="step_size", type=float, help="advection step in px (0.5)")
    g.add_argument("--source-threshold", dest="source_threshold", type=float, help="divergence above which pixels are sources (1.0)")
    g.add_argument("--dbscan-eps", dest="dbscan_eps", type=float, help="DBSCAN radius for exited points (2.0)")
    g.add_argument("--dbscan-min-samples", dest="dbscan_min_samples", type=int, help="DBSCAN core size (4)")
    g.add_argument("--seed", type=int, help="RNG seed (0)")
    g.add_argument("--workers", type=int, help="worker threads for eval (1)")
    g.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="vectransform", description="Vector-transform boundary toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("transform", parents=[common], help="mask or label map -> field file")
    s.add_argument("--mask")
    s.add_argument("--labels")
    s.add_argument("--out", required=True)
    s.add_argument("--band-out", help="also write the label boundary band (labels only)")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("invert", parents=[common], help="field -> boundary strength + mask")
    s.add_argument("field")
    s.add_argument("--prefix", help="output name prefix (default: input stem)")
    s.set_defaults(func=cmd_invert)

    s = sub.add_parser("eval", parents=[common], help="boundary metrics of predictions against ground truths")
    s.add_argument("--pred", nargs="+", required=True, help="masks or 1-channel strength .vtf files in [0, 1]")
    s.add_argument("--gt", nargs="+", required=True)
    s.add_argument("--format", choices=("csv", "kv"), default="csv")
    s.add_argument("--out", help="report file (default: stdout)")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("direction", parents=[common], help="boundary direction angles")
    s.add_argument("--field", required=True)
    s.add_argument("--boundary", required=True)
    s.add_argument("--out", help="1-channel angle file")
    s.add_argument("--compare", help="reference 1-channel angle file; prints RMSE in degrees")
    s.set_defaults(func=cmd_direction)

    s = sub.add_parser("lines", parents=[common], help="straight-line proposals")
    s.add_argument("--field", required=True)
    s.add_argument("--boundary", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_lines)

    s = sub.add_parser("superpixels", parents=[common], help="field-advection superpixels (16-bit PNG)")
    s.add_argument("--field", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_superpixels)

    s = sub.add_parser("profile", parents=[common], help="value profile versus distance to boundary")
    s.add_argument("--gt", required=True)
    s.add_argument("--values", help="field file (2 channels for divergence, 1 for raw values)")
    s.add_argument("--kind", choices=("divergence", "raw", "dt"), default="divergence")
    s.add_argument("--max-distance", type=float, default=10.0)
    s.add_argument("--bin-width", type=float, default=1.0)
    s.add_argument("--out", help="CSV file (default: stdout)")
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("viz", parents=[common], help="render a field, divergence or boundary as PNG")
    s.add_argument("input")
    s.add_argument("--out", required=True)
    s.add_argument("--quiver", type=int, default=0, help="arrow stride, 0 disables")
    s.add_argument("--divergence", action="store_true", help="render the divergence of a 2-channel field")
    s.add_argument("--boundary", action="store_true", help="treat a 1-channel file as boundary strength")
    s.add_argument("--limit", type=float, default=2.0, help="colormap range for signed images")
    s.set_defaults(func=cmd_viz)

    s = sub.add_parser("selftest", parents=[common], help="run the built-in oracle and round-trip checks")
    s.add_argument("-q", "--quiet", action="store_true")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        return args.func(args, cfg)
    except (FormatError, OSError) as e:
        print(f"vectransform: {e}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as e:
        print(f"vectransform: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
