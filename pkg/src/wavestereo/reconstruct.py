"""From disparity maps to clouds, planes, probe series and wave statistics.

The metrology chain: triangulate valid disparities into a cloud, fit the
still-water plane with seeded RANSAC plus a total-least-squares refit,
derive a world frame from it (Z = plane normal toward the camera, origin on
the plane below the camera), then read off elevation time series at a probe
and reduce them with mean up-crossing analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import errors
from .core import Plane, PointCloud, StereoRig, WaveSeries
from .geometry import camera_to_world


def disparity_to_cloud(dmap, rig, image=None, frame="camera"):
    """Triangulate valid pixels of a DisparityMap into a PointCloud.

    Invalid pixels are skipped; an all-masked map gives an empty cloud.
    """
    mask = dmap.mask
    if (dmap.height, dmap.width) != (rig.height, rig.width):
        raise errors.DimensionMismatch(
            f"map {dmap.d.shape} vs rig {(rig.height, rig.width)}")
    v, u = np.nonzero(mask)
    d = dmap.d[v, u].astype(np.float64)
    z = rig.baseline_m * rig.f_px / d
    x = z * (u - rig.u0) / rig.f_px
    y = z * (v - rig.v0) / rig.f_px
    pts = np.column_stack([x, y, z])
    if frame == "world":
        pts = camera_to_world(pts, rig)
    elif frame != "camera":
        raise errors.DimensionMismatch(f"unknown frame {frame!r}")
    intensity = None
    if image is not None:
        intensity = image.pixels[v, u].astype(np.float64)
    return PointCloud(points=pts, intensity=intensity, frame=frame)


@dataclass
class RansacParams:
    threshold: float = 0.002        # inlier point-plane distance (m)
    iterations: int = 500
    min_inlier_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.threshold <= 0 or self.iterations <= 0:
            raise errors.BadMatchParams(
                "threshold and iterations must be positive")
        if not 0 < self.min_inlier_fraction <= 1:
            raise errors.BadMatchParams("min_inlier_fraction must be in (0, 1]")


def _tls_plane(points):
    """Total-least-squares plane: smallest-eigenvector of the covariance."""
    centroid = points.mean(axis=0)
    q = points - centroid
    cov = q.T @ q
    w, v = np.linalg.eigh(cov)
    n = v[:, 0]
    norm = np.linalg.norm(n)
    if norm == 0 or not np.isfinite(norm):
        raise errors.TooFewPoints("degenerate point set for plane fit")
    n = n / norm
    return Plane(n=n, c=float(n @ centroid))


def ransac_plane(cloud, params=None):
    """Seeded RANSAC plane fit with TLS refit on the consensus set.

    Returns (plane, inlier_mask). Raises ConsensusFailure when the best
    hypothesis explains less than min_inlier_fraction of the points.
    """
    if params is None:
        params = RansacParams()
    pts = cloud.points
    n_pts = len(pts)
    if n_pts < 3:
        raise errors.TooFewPoints(f"plane fit needs >= 3 points, have {n_pts}")
    rng = np.random.default_rng(params.seed)
    best_count = -1
    best_rms = np.inf
    best_mask = None
    for _ in range(params.iterations):
        idx = rng.choice(n_pts, size=3, replace=False)
        a, b, c = pts[idx]
        n = np.cross(b - a, c - a)
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            continue
        n = n / norm
        dist = np.abs((pts - a) @ n)
        inl = dist <= params.threshold
        count = int(inl.sum())
        if count < 3:
            continue
        rms = float(np.sqrt(np.mean(dist[inl] ** 2)))
        if count > best_count or (count == best_count and rms < best_rms):
            best_count = count
            best_rms = rms
            best_mask = inl
    if best_mask is None or best_count < params.min_inlier_fraction * n_pts:
        have = 0 if best_count < 0 else best_count / n_pts
        raise errors.ConsensusFailure(
            f"best hypothesis covers {have:.1%} of points, "
            f"need {params.min_inlier_fraction:.0%}")
    plane = _tls_plane(pts[best_mask])
    return plane, best_mask


def world_frame_from_plane(plane, rig):
    """Rig pose whose world frame sits on a camera-frame plane.

    Z = plane normal oriented toward the camera center; origin = camera
    center projected onto the plane; X = camera x-axis projected into the
    plane. The input plane must be expressed in the left camera frame.
    """
    n = plane.n.copy()
    c = plane.c
    # orient the normal so the camera center (origin) is on the + side
    if -c < 0:
        n, c = -n, -c
    elif c == 0:
        raise errors.DegenerateOrientation("camera center lies on the plane")
    x_cam = np.array([1.0, 0.0, 0.0])
    x_proj = x_cam - (n @ x_cam) * n
    norm = np.linalg.norm(x_proj)
    if norm < 1e-9:
        raise errors.DegenerateOrientation(
            "camera x-axis is parallel to the plane normal")
    z_axis_cam = np.array([0.0, 0.0, 1.0])
    if abs(n @ z_axis_cam) < 1e-9:
        raise errors.DegenerateOrientation(
            "plane normal is perpendicular to the optical axis")
    X = x_proj / norm
    Z = n
    Y = np.cross(Z, X)
    origin = c * n            # camera center projected onto the plane
    R_cw = np.vstack([X, Y, Z])
    t_cw = -R_cw @ origin
    return StereoRig(f_px=rig.f_px, baseline_m=rig.baseline_m,
                     u0=rig.u0, v0=rig.v0, width=rig.width, height=rig.height,
                     pixel_pitch_m=rig.pixel_pitch_m, R_cw=R_cw, t_cw=t_cw)


@dataclass
class DeviationMap:
    grid: np.ndarray          # mean signed distance per cell (NaN = empty)
    counts: np.ndarray
    x_edges: np.ndarray
    y_edges: np.ndarray
    mean: float               # over points, not cells
    std: float


def deviation_map(cloud, plane, cell=0.01):
    """Signed point-plane distances binned onto a regular XY grid."""
    if len(cloud) == 0:
        raise errors.EmptyCloud("empty cloud")
    if cell <= 0:
        raise errors.BadMatchParams("cell size must be positive")
    pts = cloud.points
    dist = plane.signed_distance(pts)
    x = pts[:, 0]
    y = pts[:, 1]
    nx = max(1, int(math.ceil((x.max() - x.min()) / cell)))
    ny = max(1, int(math.ceil((y.max() - y.min()) / cell)))
    x_edges = x.min() + cell * np.arange(nx + 1)
    y_edges = y.min() + cell * np.arange(ny + 1)
    ix = np.clip(((x - x.min()) / cell).astype(np.int64), 0, nx - 1)
    iy = np.clip(((y - y.min()) / cell).astype(np.int64), 0, ny - 1)
    flat = iy * nx + ix
    sums = np.bincount(flat, weights=dist, minlength=nx * ny)
    counts = np.bincount(flat, minlength=nx * ny)
    with np.errstate(invalid="ignore"):
        grid = (sums / counts).reshape(ny, nx)
    return DeviationMap(grid=grid, counts=counts.reshape(ny, nx),
                        x_edges=x_edges, y_edges=y_edges,
                        mean=float(dist.mean()), std=float(dist.std()))


def extract_probe_series(clouds, probe_xy, radius=0.005, frame_rate=50.0,
                         t0=0.0, probe_id="stereo", max_gap=2):
    """Median world-Z near the probe, one sample per frame.

    Frames with no points inside the radius are gaps; runs of at most
    max_gap interior gaps are linearly interpolated, anything longer (or
    gaps touching either end) raises ProbeStarved.
    """
    px, py = probe_xy
    r2 = radius * radius
    vals = []
    for cloud in clouds:
        if cloud.frame != "world":
            raise errors.DimensionMismatch("probe extraction needs world clouds")
        pts = cloud.points
        d2 = (pts[:, 0] - px) ** 2 + (pts[:, 1] - py) ** 2
        sel = d2 <= r2
        vals.append(float(np.median(pts[sel, 2])) if sel.any() else np.nan)
    eta = np.array(vals)
    if eta.size == 0:
        raise errors.ProbeStarved("no frames")
    bad = np.isnan(eta)
    if bad.all():
        raise errors.ProbeStarved("probe region is empty in every frame")
    if bad.any():
        idx = np.nonzero(bad)[0]
        # split into runs and check each
        runs = np.split(idx, np.nonzero(np.diff(idx) > 1)[0] + 1)
        for run in runs:
            if run[0] == 0 or run[-1] == eta.size - 1 or len(run) > max_gap:
                raise errors.ProbeStarved(
                    f"gap of {len(run)} frames at frame {int(run[0])}")
        good = ~bad
        eta[bad] = np.interp(np.nonzero(bad)[0], np.nonzero(good)[0], eta[good])
    return WaveSeries(t0=t0, dt=1.0 / frame_rate, eta=eta,
                      probe_id=probe_id, probe_xy=(px, py))


@dataclass
class WaveStats:
    mean_height: float
    mean_period: float
    n_waves: int
    r_squared: float | None = None
    slope: float | None = None
    intercept: float | None = None
    mean_bias_percent: float | None = None


def zero_crossing_stats(series):
    """Mean wave height and period by up-crossing analysis.

    The mean is removed, up-crossing times are linearly interpolated, and
    each complete wave (between consecutive up-crossings) contributes its
    sample max - min as a height.
    """
    eta = series.eta - series.eta.mean()
    t = series.times()
    n = eta.size
    crossings = []
    for i in range(n - 1):
        if eta[i] < 0 and eta[i + 1] >= 0:
            # linear interpolation of the crossing time
            frac = -eta[i] / (eta[i + 1] - eta[i])
            crossings.append(t[i] + frac * series.dt)
    if len(crossings) < 2:
        raise errors.TooFewCrossings(
            f"found {len(crossings)} up-crossings, need >= 2")
    crossings = np.array(crossings)
    heights = []
    for a, b in zip(crossings[:-1], crossings[1:]):
        seg = eta[(t >= a) & (t < b)]
        if seg.size:
            heights.append(seg.max() - seg.min())
    periods = np.diff(crossings)
    if not heights:
        raise errors.TooFewCrossings("no samples between crossings")
    return WaveStats(mean_height=float(np.mean(heights)),
                     mean_period=float(np.mean(periods)),
                     n_waves=len(heights))


def r_squared(probe, stereo):
    """Coefficient of determination of stereo elevations vs probe truth."""
    p = np.asarray(probe, dtype=np.float64)
    s = np.asarray(stereo, dtype=np.float64)
    if p.shape != s.shape or p.size < 2:
        raise errors.DimensionMismatch(
            "series must have equal length >= 2 after alignment")
    ss_tot = float(np.sum((p - p.mean()) ** 2))
    if ss_tot == 0:
        raise errors.ZeroVariance("probe series has zero variance")
    ss_res = float(np.sum((p - s) ** 2))
    return 1.0 - ss_res / ss_tot


def linear_fit_bias(probe, stereo):
    """OLS fit stereo = slope * probe + intercept.

    Returns (slope, intercept, mean_bias_percent) with the bias defined as
    |1 - slope| * 100.
    """
    p = np.asarray(probe, dtype=np.float64)
    s = np.asarray(stereo, dtype=np.float64)
    if p.shape != s.shape or p.size < 2:
        raise errors.DimensionMismatch("series must have equal length >= 2")
    var = float(np.sum((p - p.mean()) ** 2))
    if var == 0:
        raise errors.DegenerateSpread("probe series has zero spread")
    slope = float(np.sum((p - p.mean()) * (s - s.mean())) / var)
    intercept = float(s.mean() - slope * p.mean())
    return slope, intercept, abs(1.0 - slope) * 100.0


def align_series(reference, other):
    """Integer-lag alignment by cross-correlation peak.

    Returns (ref_slice, other_slice, lag) where positive lag means `other`
    starts lag samples later than `reference`. Both outputs have equal
    length (the overlap).
    """
    a = np.asarray(reference.eta if isinstance(reference, WaveSeries)
                   else reference, dtype=np.float64)
    b = np.asarray(other.eta if isinstance(other, WaveSeries)
                   else other, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise errors.DimensionMismatch("need at least two samples to align")
    aa = a - a.mean()
    bb = b - b.mean()
    corr = np.correlate(aa, bb, mode="full")
    lag = int(np.argmax(corr)) - (b.size - 1)
    if lag >= 0:
        n = min(a.size - lag, b.size)
        return a[lag:lag + n], b[:n], lag
    n = min(b.size + lag, a.size)
    return a[:n], b[-lag:-lag + n], lag
