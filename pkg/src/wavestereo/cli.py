"""Command-line surface: one subcommand per pipeline stage.

Every run prints a single JSON report to stdout carrying the effective
configuration (the config echo) plus result paths or inline results.
Reruns are byte-identical except for the timestamp field. Errors are
machine-parsable JSON on stderr; exit codes: 0 ok, 1 computation error,
2 usage or input error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import errors, formats
from .budget import budget_table, write_budget_csv
from .core import DisparityMap, Image, PointCloud
from .matching import MatchParams, ingest_external_disparity, match_pair
from .metrics import evaluate_disparity
from .oracle import (SceneSpec, probe_series, render_stereo_pair,
                     spec_from_dict, spec_to_dict)
from .pipeline import (DEFAULT_PROBE_RADIUS, DEFAULT_PROBE_XY, _map_frames,
                       default_match_params)
from .reconstruct import (RansacParams, align_series, disparity_to_cloud,
                          deviation_map, extract_probe_series,
                          linear_fit_bias, r_squared, ransac_plane,
                          world_frame_from_plane, zero_crossing_stats)
from .synth import AdaptManifest, export_dataset, synthesize_tuple


def _timestamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _report(command, config, results):
    doc = {"command": command, "timestamp": _timestamp(),
           "config": config, "results": results}
    return json.dumps(doc, sort_keys=True, indent=2)


def _emit(command, config, results, out_dir=None):
    text = _report(command, config, results)
    print(text)
    if out_dir is not None:
        (Path(out_dir) / f"{command}_report.json").write_text(text + "\n")


def _require(path):
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(None, None, str(p))
    return p


def _load_image(path):
    return formats.read_pgm(_require(path))


def _load_disparity(path, width=None, height=None, d_min=None, d_max=None):
    if d_min is not None and d_max is not None:
        return ingest_external_disparity(
            _require(path), width, height,
            MatchParams(d_min=d_min, d_max=d_max))
    d, _scale = formats.read_pfm(_require(path))
    if width is not None and d.shape != (height, width):
        raise errors.DimensionMismatch(
            f"disparity {d.shape} vs expected {(height, width)}")
    with np.errstate(invalid="ignore"):
        mask = np.isfinite(d) & (d > 0)
    if not mask.any():
        raise errors.AllMasked(f"no usable disparities in {path}")
    return DisparityMap(d=d, mask=mask)


def _match_params(args, spec=None):
    if args.d_min is None or args.d_max is None:
        if spec is None:
            raise errors.BadMatchParams(
                "--d-min and --d-max are required without a scene")
        return default_match_params(
            spec, census_window=args.census_window, paths=args.paths,
            subpixel=not args.no_subpixel, lr_threshold=args.lr_threshold,
            p1=args.p1, p2=args.p2)
    return MatchParams(d_min=args.d_min, d_max=args.d_max,
                       census_window=args.census_window, paths=args.paths,
                       subpixel=not args.no_subpixel,
                       lr_threshold=args.lr_threshold,
                       p1=args.p1, p2=args.p2)


def _add_match_flags(p, require_range=True):
    p.add_argument("--d-min", type=int, required=require_range,
                   default=None, help="smallest disparity searched (px)")
    p.add_argument("--d-max", type=int, required=require_range,
                   default=None, help="largest disparity searched (px)")
    p.add_argument("--census-window", type=int, default=5)
    p.add_argument("--p1", type=int, default=None)
    p.add_argument("--p2", type=int, default=None)
    p.add_argument("--paths", type=int, default=4, choices=(2, 4, 8))
    p.add_argument("--lr-threshold", type=float, default=1.0)
    p.add_argument("--no-subpixel", action="store_true")


# ------------------------------------------------------------------ synth

def cmd_synth(args):
    if args.scene is not None:
        spec = spec_from_dict(json.loads(_require(args.scene).read_text()))
    else:
        spec = SceneSpec()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    probe_xy = (args.probe_x, args.probe_y)

    def one_frame(i):
        t = args.t0 + i / spec.frame_rate
        left, right, gt = render_stereo_pair(spec, t)
        formats.write_pgm(out / f"{i:04d}_left.pgm", left)
        formats.write_pgm(out / f"{i:04d}_right.pgm", right)
        formats.write_pfm(out / f"{i:04d}_disp.pfm", gt.disparity.d)
        formats.write_pgm(out / f"{i:04d}_vis.pgm",
                          Image(gt.visibility.astype(np.float32) * 255.0))
        return f"{i:04d}"

    stems = list(_map_frames(one_frame, args.frames, args.threads))
    series = probe_series(spec, probe_xy, t0=args.t0, n_frames=args.frames)
    formats.write_series_csv(out / "probe.csv", series)
    manifest = {"scene": spec_to_dict(spec), "n_frames": args.frames,
                "t0": args.t0, "probe_xy": list(probe_xy), "frames": stems}
    (out / "scene_manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    config = {"scene": spec_to_dict(spec), "frames": args.frames,
              "t0": args.t0, "probe_xy": list(probe_xy),
              "threads": args.threads, "out": str(out)}
    _emit("synth", config, {"frames": len(stems),
                            "manifest": str(out / "scene_manifest.json"),
                            "probe_csv": str(out / "probe.csv")}, out)
    return 0


# ------------------------------------------------------------------ match

def cmd_match(args):
    left = _load_image(args.left)
    right = _load_image(args.right)
    params = _match_params(args)
    dmap = match_pair(left, right, params)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    formats.write_pfm(out, dmap.d)
    config = {"left": str(args.left), "right": str(args.right),
              "params": dict(vars(params)), "out": str(out)}
    _emit("match", config,
          {"disparity": str(out), "valid_fraction": float(dmap.mask.mean())},
          out.parent)
    return 0


# ------------------------------------------------------------------ adapt

def cmd_adapt(args):
    pair_dir = _require(args.pairs)
    depth_dir = _require(args.depths)
    lefts = sorted(pair_dir.glob("*_left.pgm"))
    if not lefts:
        raise errors.InputError(f"no *_left.pgm files in {pair_dir}")
    tuples = []
    for lp in lefts:
        stem = lp.name[:-len("_left.pgm")]
        rp = _require(pair_dir / f"{stem}_right.pgm")
        dp = _require(depth_dir / f"{stem}_depth.pfm")
        left = _load_image(lp)
        right = _load_image(rp)
        rel_depth, _ = formats.read_pfm(dp)
        tuples.append(synthesize_tuple(left, right, rel_depth,
                                       args.d_min, args.d_max))
    manifest = AdaptManifest(tuple_paths=[], batch_size=args.batch_size,
                             max_iterations=args.max_iterations,
                             crop_h=args.crop_h, crop_w=args.crop_w,
                             shuffle_seed=args.seed)
    out = Path(args.out)
    written = export_dataset(tuples, out, shuffle_seed=args.seed,
                             manifest=manifest)
    config = {"pairs": str(pair_dir), "depths": str(depth_dir),
              "d_min": args.d_min, "d_max": args.d_max, "seed": args.seed,
              "batch_size": args.batch_size,
              "max_iterations": args.max_iterations,
              "crop": [args.crop_h, args.crop_w], "out": str(out)}
    _emit("adapt", config,
          {"tuples": len(tuples), "manifest": str(written)}, out)
    return 0


# ------------------------------------------------------------ reconstruct

def cmd_reconstruct(args):
    disp_dir = _require(args.disparities)
    rig = formats.read_calibration(_require(args.calibration))
    files = sorted(disp_dir.glob("*.pfm"))
    if not files:
        raise errors.InputError(f"no *.pfm files in {disp_dir}")
    if not 0 <= args.plane_index < len(files):
        raise errors.InputError(
            f"--plane-index {args.plane_index} outside 0..{len(files) - 1}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    # the still-water frame: a dedicated file, or one of the sequence
    plane_src = (Path(args.plane_from) if args.plane_from is not None
                 else files[args.plane_index])
    ref = _load_disparity(plane_src, rig.width, rig.height,
                          args.d_min, args.d_max)
    ref_cloud = disparity_to_cloud(ref, rig, frame="camera")
    ransac = RansacParams(seed=args.seed)
    plane, inliers = ransac_plane(ref_cloud, ransac)
    world_rig = world_frame_from_plane(plane, rig)
    dev = deviation_map(PointCloud(points=ref_cloud.points[inliers],
                                   frame="camera"), plane)
    formats.write_calibration(out / "calibration_world.json", world_rig)

    def one_frame(i):
        dmap = _load_disparity(files[i], rig.width, rig.height,
                               args.d_min, args.d_max)
        cloud = disparity_to_cloud(dmap, world_rig, frame="world")
        name = files[i].stem + ".ply"
        formats.write_ply(out / name, cloud, binary=not args.ascii_ply)
        return name

    names = list(_map_frames(one_frame, len(files), args.threads))
    plane_doc = {"normal_camera": [float(x) for x in plane.n],
                 "offset_m": float(plane.c),
                 "inlier_fraction": float(inliers.mean()),
                 "deviation_mean_m": dev.mean, "deviation_std_m": dev.std,
                 "deviation_std_cm": dev.std * 100.0}
    (out / "plane.json").write_text(
        json.dumps(plane_doc, sort_keys=True, indent=2) + "\n")
    config = {"disparities": str(disp_dir),
              "calibration": str(args.calibration),
              "plane_index": args.plane_index,
              "plane_from": args.plane_from, "seed": args.seed,
              "d_min": args.d_min, "d_max": args.d_max,
              "threads": args.threads, "out": str(out)}
    _emit("reconstruct", config,
          {"clouds": names, "plane": plane_doc,
           "world_calibration": str(out / "calibration_world.json")}, out)
    return 0


# ----------------------------------------------------------------- series

def cmd_series(args):
    cloud_dir = _require(args.clouds)
    files = sorted(cloud_dir.glob("*.ply"))
    if not files:
        raise errors.InputError(f"no *.ply files in {cloud_dir}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    clouds = (formats.read_ply(p) for p in files)
    series = extract_probe_series(clouds, (args.probe_x, args.probe_y),
                                  radius=args.radius, frame_rate=args.rate,
                                  t0=args.t0)
    formats.write_series_csv(out / "series.csv", series)
    stats = zero_crossing_stats(series)
    doc = {"H_bar": stats.mean_height, "T_bar": stats.mean_period,
           "n_waves": stats.n_waves}
    if args.reference is not None:
        ref = formats.read_series_csv(_require(args.reference))
        p_al, s_al, lag = align_series(ref, series)
        doc["r_squared"] = r_squared(p_al, s_al)
        slope, intercept, bias = linear_fit_bias(p_al, s_al)
        doc["slope"] = slope
        doc["intercept"] = intercept
        doc["mean_bias_percent"] = bias
        doc["lag_frames"] = lag
    (out / "stats.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n")
    config = {"clouds": str(cloud_dir),
              "probe_xy": [args.probe_x, args.probe_y],
              "radius": args.radius, "rate": args.rate, "t0": args.t0,
              "reference": args.reference, "out": str(out)}
    _emit("series", config, {"series_csv": str(out / "series.csv"),
                             "stats": doc}, out)
    return 0


# ------------------------------------------------------------------- eval

def cmd_eval(args):
    left = _load_image(args.left)
    right = _load_image(args.right)
    dmap = _load_disparity(args.disparity, left.width, left.height,
                           args.d_min, args.d_max)
    report = evaluate_disparity(left, right, dmap, max_val=args.max_val)
    config = {"left": str(args.left), "right": str(args.right),
              "disparity": str(args.disparity), "max_val": args.max_val,
              "d_min": args.d_min, "d_max": args.d_max}
    results = report.to_dict()
    if args.out is not None:
        outp = Path(args.out)
        outp.parent.mkdir(parents=True, exist_ok=True)
        outp.write_text(json.dumps(results, sort_keys=True, indent=2) + "\n")
    _emit("eval", config, results)
    return 0


# ----------------------------------------------------------------- budget

def cmd_budget(args):
    rig = formats.read_calibration(_require(args.calibration))
    rows = budget_table(rig, args.z_min, args.z_max,
                        n_samples=args.samples, e=args.e)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_budget_csv(out, rows)
    mirror = out.with_suffix(".json")
    mirror.write_text(json.dumps([r.to_dict() for r in rows],
                                 sort_keys=True, indent=2) + "\n")
    config = {"calibration": str(args.calibration), "z_min": args.z_min,
              "z_max": args.z_max, "samples": args.samples, "e": args.e,
              "out": str(out)}
    _emit("budget", config, {"csv": str(out), "json": str(mirror),
                             "rows": len(rows)})
    return 0


# ----------------------------------------------------------------- parser

def build_parser():
    ap = argparse.ArgumentParser(
        prog="wavestereo",
        description="Thermal stereo wave-surface toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render an oracle stereo sequence")
    p.add_argument("--scene", default=None, help="SceneSpec JSON (default scene if omitted)")
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--probe-x", type=float, default=DEFAULT_PROBE_XY[0])
    p.add_argument("--probe-y", type=float, default=DEFAULT_PROBE_XY[1])
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("match", help="census + semi-global matching")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--out", required=True, help="output disparity PFM")
    _add_match_flags(p)
    p.set_defaults(fn=cmd_match)

    p = sub.add_parser("adapt", help="synthesize training tuples + manifest")
    p.add_argument("pairs", help="directory of *_left.pgm / *_right.pgm")
    p.add_argument("depths", help="directory of *_depth.pfm relative depth")
    p.add_argument("--d-min", type=float, required=True)
    p.add_argument("--d-max", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=2)
    p.add_argument("--max-iterations", type=int, default=20000)
    p.add_argument("--crop-h", type=int, default=320)
    p.add_argument("--crop-w", type=int, default=512)
    p.set_defaults(fn=cmd_adapt)

    p = sub.add_parser("reconstruct",
                       help="disparities -> world clouds + plane report")
    p.add_argument("disparities", help="directory of *.pfm")
    p.add_argument("calibration", help="rig JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--plane-index", type=int, default=0,
                   help="frame used for the still-water plane fit")
    p.add_argument("--plane-from", default=None,
                   help="separate still-water disparity PFM for the plane fit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d-min", type=float, default=None)
    p.add_argument("--d-max", type=float, default=None)
    p.add_argument("--ascii-ply", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_reconstruct)

    p = sub.add_parser("series", help="probe series + wave stats from clouds")
    p.add_argument("clouds", help="directory of world-frame *.ply")
    p.add_argument("--out", required=True)
    p.add_argument("--probe-x", type=float, default=DEFAULT_PROBE_XY[0])
    p.add_argument("--probe-y", type=float, default=DEFAULT_PROBE_XY[1])
    p.add_argument("--radius", type=float, default=DEFAULT_PROBE_RADIUS)
    p.add_argument("--rate", type=float, default=50.0)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--reference", default=None,
                   help="reference probe CSV for R^2 and bias")
    p.set_defaults(fn=cmd_series)

    p = sub.add_parser("eval", help="photometric metrics for a disparity")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("disparity", help="PFM disparity map")
    p.add_argument("--d-min", type=float, default=None)
    p.add_argument("--d-max", type=float, default=None)
    p.add_argument("--max-val", type=float, default=255.0)
    p.add_argument("--out", default=None, help="also write the report here")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("budget", help="triangulation error budget table")
    p.add_argument("calibration", help="rig JSON")
    p.add_argument("--z-min", type=float, required=True)
    p.add_argument("--z-max", type=float, required=True)
    p.add_argument("--samples", type=int, default=21)
    p.add_argument("--e", type=float, default=1.0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(fn=cmd_budget)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as e:
        path = e.filename if getattr(e, "filename", None) else str(e)
        print(json.dumps({"error": "FileNotFound", "path": str(path)},
                         sort_keys=True), file=sys.stderr)
        return 2
    except errors.WavestereoError as e:
        doc = {"error": type(e).__name__, "message": str(e)}
        doc.update(e.payload())
        print(json.dumps(doc, sort_keys=True), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
