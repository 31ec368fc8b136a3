"""File formats: PFM disparity maps, PGM images, PLY clouds, series CSV,
calibration JSON.

PFM stores rows bottom-up on disk; in memory everything is top-down row 0
first. Canonical files written by this module are little-endian (scale
line ``-1.0``) and round-trip byte-identically, NaN payloads included.
"""

from __future__ import annotations

import json

import numpy as np

from . import errors
from .core import Image, PointCloud, StereoRig, WaveSeries

MAX_PIXELS = 100_000_000


class _Tokens:
    """Whitespace-separated token scanner that tracks byte offsets."""

    def __init__(self, data):
        self.data = data
        self.pos = 0

    def skip_ws(self, comments=False):
        while self.pos < len(self.data):
            b = self.data[self.pos]
            if comments and b == ord("#"):
                nl = self.data.find(b"\n", self.pos)
                self.pos = len(self.data) if nl < 0 else nl + 1
            elif b in b" \t\r\n":
                self.pos += 1
            else:
                break

    def next(self, what, comments=False):
        self.skip_ws(comments=comments)
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos] not in b" \t\r\n":
            self.pos += 1
        if self.pos == start:
            raise errors.MalformedHeader(f"expected {what}", offset=start)
        return self.data[start:self.pos].decode("ascii", "replace"), start

    def consume_single_ws(self):
        # binary payload begins after exactly one whitespace byte
        if self.pos >= len(self.data) or self.data[self.pos] not in b" \t\r\n":
            raise errors.MalformedHeader("missing separator before payload",
                                         offset=self.pos)
        self.pos += 1


def _parse_dims(tok, what):
    text, off = tok.next(what, comments=True)
    try:
        val = int(text)
    except ValueError:
        raise errors.MalformedHeader(f"{what} {text!r} is not an integer",
                                     offset=off) from None
    return val, off


# -------------------------------------------------------------------- PFM

def read_pfm(path):
    """Read a grayscale PFM file into (array, scale_magnitude).

    Both endiannesses are accepted; the returned array is top-down float32
    with NaN bit patterns preserved.
    """
    with open(path, "rb") as f:
        data = f.read()
    tok = _Tokens(data)
    magic, off = tok.next("PFM magic")
    if magic == "PF":
        raise errors.UnsupportedChannels("color PFM ('PF') is not supported")
    if magic != "Pf":
        raise errors.MalformedHeader(f"bad PFM magic {magic!r}", offset=off)
    width, woff = _parse_dims(tok, "width")
    height, hoff = _parse_dims(tok, "height")
    if width <= 0 or height <= 0:
        raise errors.DimensionOverflow(f"nonpositive dimensions {width}x{height}")
    if width * height > MAX_PIXELS:
        raise errors.DimensionOverflow(f"dimensions {width}x{height} overflow")
    stext, soff = tok.next("scale")
    try:
        scale = float(stext)
    except ValueError:
        raise errors.MalformedHeader(f"scale {stext!r} is not a number",
                                     offset=soff) from None
    if scale == 0:
        raise errors.MalformedHeader("scale must be nonzero", offset=soff)
    tok.consume_single_ws()
    need = width * height * 4
    payload = data[tok.pos:tok.pos + need]
    if len(payload) < need:
        raise errors.TruncatedPayload(
            f"payload has {len(payload)} of {need} bytes",
            offset=tok.pos + len(payload))
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    arr = np.ascontiguousarray(arr[::-1].astype("<f4", copy=False))
    return arr, abs(scale)


def write_pfm(path, arr):
    """Write a 2-D float32 array as a little-endian grayscale PFM."""
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise errors.DimensionMismatch(f"PFM payload must be 2-D, got {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype="<f4")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n%d %d\n-1.0\n" % (w, h))
        f.write(np.ascontiguousarray(arr[::-1]).tobytes())


# -------------------------------------------------------------------- PGM

def read_pgm(path):
    """Read a binary PGM (P5, 8- or 16-bit) as a float Image (raw counts)."""
    with open(path, "rb") as f:
        data = f.read()
    tok = _Tokens(data)
    magic, off = tok.next("PGM magic")
    if magic != "P5":
        raise errors.MalformedHeader(f"bad PGM magic {magic!r}", offset=off)
    width, _ = _parse_dims(tok, "width")
    height, _ = _parse_dims(tok, "height")
    if width <= 0 or height <= 0 or width * height > MAX_PIXELS:
        raise errors.DimensionOverflow(f"bad dimensions {width}x{height}")
    maxval, moff = _parse_dims(tok, "maxval")
    if not 0 < maxval < 65536:
        raise errors.MalformedHeader(f"maxval {maxval} out of range", offset=moff)
    tok.consume_single_ws()
    bpp = 1 if maxval < 256 else 2
    need = width * height * bpp
    payload = data[tok.pos:tok.pos + need]
    if len(payload) < need:
        raise errors.TruncatedPayload(
            f"payload has {len(payload)} of {need} bytes",
            offset=tok.pos + len(payload))
    dtype = np.uint8 if bpp == 1 else ">u2"
    arr = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return Image(arr.astype(np.float32))


def write_pgm(path, image, maxval=255):
    """Write an Image as binary PGM, rounding and clamping to [0, maxval]."""
    if not 0 < maxval < 65536:
        raise errors.MalformedHeader(f"maxval {maxval} out of range")
    px = np.clip(np.rint(image.pixels), 0, maxval)
    arr = px.astype(np.uint8) if maxval < 256 else px.astype(">u2")
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n%d\n" % (image.width, image.height, maxval))
        f.write(np.ascontiguousarray(arr).tobytes())


# -------------------------------------------------------------------- PLY

def write_ply(path, cloud, binary=True):
    """Write a PointCloud as PLY with double-precision vertex properties.

    Doubles keep the round trip lossless; the reader also accepts float32
    files from other tools. The cloud's frame tag travels in a comment.
    """
    n = len(cloud)
    has_i = cloud.intensity is not None
    fmt = "binary_little_endian" if binary else "ascii"
    header = [
        "ply",
        f"format {fmt} 1.0",
        f"comment frame {cloud.frame}",
        f"element vertex {n}",
        "property double x",
        "property double y",
        "property double z",
    ]
    if has_i:
        header.append("property double intensity")
    header.append("end_header")
    cols = 4 if has_i else 3
    rows = np.empty((n, cols), dtype="<f8")
    rows[:, :3] = cloud.points
    if has_i:
        rows[:, 3] = cloud.intensity
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            f.write(rows.tobytes())
        else:
            for r in rows:
                f.write((" ".join("%.17g" % x for x in r) + "\n").encode("ascii"))


_PLY_TYPES = {"float": ("<f4", 4), "float32": ("<f4", 4),
              "double": ("<f8", 8), "float64": ("<f8", 8)}


def read_ply(path):
    """Read an ascii or binary_little_endian PLY vertex cloud."""
    with open(path, "rb") as f:
        data = f.read()
    end = data.find(b"end_header")
    if end < 0:
        raise errors.MalformedHeader("no end_header", offset=len(data))
    body_at = data.find(b"\n", end) + 1
    lines = data[:end].decode("ascii", "replace").splitlines()
    if not lines or lines[0].strip() != "ply":
        raise errors.MalformedHeader("bad PLY magic", offset=0)
    fmt = None
    n = None
    props = []
    frame = "camera"
    for ln in lines[1:]:
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "comment":
            if len(parts) >= 3 and parts[1] == "frame":
                frame = parts[2]
        elif parts[0] == "element":
            if parts[1] != "vertex":
                raise errors.MalformedHeader(f"unsupported element {parts[1]!r}")
            n = int(parts[2])
        elif parts[0] == "property":
            if parts[1] not in _PLY_TYPES:
                raise errors.MalformedHeader(f"unsupported property type {parts[1]!r}")
            props.append((parts[2], _PLY_TYPES[parts[1]]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise errors.MalformedHeader(f"unsupported format {fmt!r}")
    if n is None:
        raise errors.MalformedHeader("no vertex element")
    names = [p[0] for p in props]
    if names not in (["x", "y", "z"], ["x", "y", "z", "intensity"]):
        raise errors.MalformedHeader(f"unsupported vertex layout {names}")
    if fmt == "ascii":
        text = data[body_at:].split()
        need = n * len(props)
        if len(text) < need:
            raise errors.TruncatedPayload(f"have {len(text)} of {need} values")
        vals = np.array([float(x) for x in text[:need]],
                        dtype=np.float64).reshape(n, len(props))
    else:
        rowbytes = sum(p[1][1] for p in props)
        need = n * rowbytes
        payload = data[body_at:body_at + need]
        if len(payload) < need:
            raise errors.TruncatedPayload(
                f"payload has {len(payload)} of {need} bytes",
                offset=body_at + len(payload))
        dt = np.dtype([(p[0], p[1][0]) for p in props])
        rec = np.frombuffer(payload, dtype=dt, count=n)
        vals = np.column_stack([rec[nm].astype(np.float64) for nm in names])
    intensity = vals[:, 3] if len(props) == 4 else None
    return PointCloud(points=vals[:, :3], intensity=intensity, frame=frame)


# ------------------------------------------------------------- series CSV

def write_series_csv(path, series):
    """Write a WaveSeries as CSV with a ``t,eta`` header.

    Sampling metadata goes into ``#`` comment lines above the header so the
    round trip is exact; plain two-column files are also readable.
    """
    lines = [
        f"# probe_id: {series.probe_id}",
        "# probe_xy: %.17g %.17g" % tuple(series.probe_xy),
        "# t0: %.17g" % series.t0,
        "# dt: %.17g" % series.dt,
        "t,eta",
    ]
    t = series.times()
    for i in range(series.n):
        lines.append("%.17g,%.17g" % (t[i], series.eta[i]))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_series_csv(path):
    with open(path) as f:
        raw = f.read().splitlines()
    meta = {}
    rows = []
    header_seen = False
    for ln in raw:
        ln = ln.strip()
        if not ln:
            continue
        if ln.startswith("#"):
            body = ln[1:].strip()
            if ":" in body:
                k, v = body.split(":", 1)
                meta[k.strip()] = v.strip()
            continue
        if not header_seen:
            cols = [c.strip() for c in ln.split(",")]
            if cols != ["t", "eta"]:
                raise errors.MalformedHeader(f"expected 't,eta' header, got {ln!r}")
            header_seen = True
            continue
        parts = ln.split(",")
        if len(parts) != 2:
            raise errors.MalformedHeader(f"bad series row {ln!r}")
        rows.append((float(parts[0]), float(parts[1])))
    if not header_seen:
        raise errors.MalformedHeader("no 't,eta' header")
    if len(rows) < 2:
        raise errors.NonuniformSampling("series needs at least two samples")
    t = np.array([r[0] for r in rows])
    eta = np.array([r[1] for r in rows])
    if "t0" in meta and "dt" in meta:
        t0, dt = float(meta["t0"]), float(meta["dt"])
    else:
        t0 = t[0]
        dt = float(np.median(np.diff(t)))
    if dt <= 0:
        raise errors.NonuniformSampling(f"inferred dt {dt} is not positive")
    expect = t0 + dt * np.arange(len(t))
    if np.max(np.abs(t - expect)) > 1e-6 * max(dt, 1.0):
        raise errors.NonuniformSampling("time column is not uniformly sampled")
    probe_xy = (0.0, 0.0)
    if "probe_xy" in meta:
        px = meta["probe_xy"].split()
        probe_xy = (float(px[0]), float(px[1]))
    return WaveSeries(t0=t0, dt=dt, eta=eta,
                      probe_id=meta.get("probe_id", "probe"), probe_xy=probe_xy)


# -------------------------------------------------------- calibration JSON

_CALIB_KEYS = ("f_mm", "pixel_pitch_um", "baseline_m", "u0", "v0",
               "width", "height", "rotation", "translation")


def _rotation_from_json(rot):
    if isinstance(rot, dict):
        for k in ("axis", "angle_deg"):
            if k not in rot:
                raise errors.MissingKey(f"rotation.{k}")
        axis = np.asarray(rot["axis"], dtype=np.float64).reshape(3)
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise errors.MalformedHeader("rotation axis must be nonzero")
        from scipy.spatial.transform import Rotation
        vec = axis / norm * np.deg2rad(float(rot["angle_deg"]))
        return Rotation.from_rotvec(vec).as_matrix()
    arr = np.asarray(rot, dtype=np.float64).reshape(-1)
    if arr.shape[0] != 9:
        raise errors.MalformedHeader(
            f"rotation must be 9 floats or axis-angle, got {len(arr)} values")
    R = arr.reshape(3, 3)
    if np.linalg.det(R) < 0:
        raise errors.ReflectionNotAllowed(
            f"rotation has determinant {np.linalg.det(R):.6f}")
    return R


def rig_from_dict(cfg):
    for k in _CALIB_KEYS:
        if k not in cfg:
            raise errors.MissingKey(k)
    pitch_m = float(cfg["pixel_pitch_um"]) * 1e-6
    if pitch_m <= 0:
        raise errors.MalformedHeader("pixel_pitch_um must be positive")
    f_px = float(cfg["f_mm"]) * 1e-3 / pitch_m
    R = _rotation_from_json(cfg["rotation"])
    t = np.asarray(cfg["translation"], dtype=np.float64).reshape(3)
    return StereoRig(f_px=f_px, baseline_m=float(cfg["baseline_m"]),
                     u0=float(cfg["u0"]), v0=float(cfg["v0"]),
                     width=int(cfg["width"]), height=int(cfg["height"]),
                     pixel_pitch_m=pitch_m, R_cw=R, t_cw=t)


def rig_to_dict(rig):
    return {
        "f_mm": rig.f_m * 1e3,
        "pixel_pitch_um": rig.pixel_pitch_m * 1e6,
        "baseline_m": rig.baseline_m,
        "u0": rig.u0, "v0": rig.v0,
        "width": rig.width, "height": rig.height,
        "rotation": [float(x) for x in rig.R_cw.reshape(-1)],
        "translation": [float(x) for x in rig.t_cw],
    }


def read_calibration(path):
    with open(path) as f:
        try:
            cfg = json.load(f)
        except json.JSONDecodeError as e:
            raise errors.MalformedHeader(f"bad calibration JSON: {e}",
                                         offset=e.pos) from None
    return rig_from_dict(cfg)


def write_calibration(path, rig):
    with open(path, "w") as f:
        json.dump(rig_to_dict(rig), f, indent=2)
        f.write("\n")
