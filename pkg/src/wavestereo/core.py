"""Core data types shared by every stage of the toolkit.

Conventions used throughout:

* images are row-major ``float32`` grids, row 0 at the top of the frame;
* pixel coordinates are ``(u, v)`` = (column, row);
* the camera frame has x to the right, y down, z along the optical axis;
* disparity is left-referenced, ``d = u_left - u_right``, positive for
  points in front of a rectified pair;
* the world frame is right-handed with Z up and Z = 0 at still water.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import errors

ORTHO_TOL = 1e-9


@dataclass
class Image:
    """Single-channel intensity grid (arbitrary radiometric units)."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.float32)
        if self.pixels.ndim != 2:
            raise errors.DimensionMismatch(
                f"image must be 2-D, got shape {self.pixels.shape}")
        if self.pixels.size == 0:
            raise errors.DimensionOverflow("image has zero pixels")
        if not np.all(np.isfinite(self.pixels)):
            raise errors.DimensionMismatch("image contains non-finite values")

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


@dataclass
class DisparityMap:
    """Left-referenced disparity grid plus a validity mask.

    Valid entries are finite and strictly positive; invalid entries are
    stored as NaN so accidental use poisons downstream arithmetic.
    """

    d: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.d = np.ascontiguousarray(self.d, dtype=np.float32)
        self.mask = np.ascontiguousarray(self.mask, dtype=bool)
        if self.d.ndim != 2 or self.mask.shape != self.d.shape:
            raise errors.DimensionMismatch(
                f"disparity {self.d.shape} and mask {self.mask.shape} differ")
        valid = self.d[self.mask]
        if valid.size and not (np.all(np.isfinite(valid)) and np.all(valid > 0)):
            raise errors.NonpositiveDisparity(
                "valid disparities must be finite and > 0")
        # normalize invalid entries to NaN
        self.d[~self.mask] = np.nan

    @property
    def height(self):
        return self.d.shape[0]

    @property
    def width(self):
        return self.d.shape[1]


def rotation_is_valid(R, tol=ORTHO_TOL):
    """True when R is a proper rotation: orthonormal with det +1."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        return False
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
        return False
    return abs(np.linalg.det(R) - 1.0) <= tol


@dataclass
class StereoRig:
    """Rectified pinhole pair.

    The pose (R_cw, t_cw) maps left-camera coordinates to world coordinates:
    ``p_world = R_cw @ p_camera + t_cw``. The right camera sits at baseline
    offset +x in the left camera frame and shares the orientation, so
    epipolar lines are image rows.
    """

    f_px: float            # focal length in pixels
    baseline_m: float
    u0: float
    v0: float
    width: int
    height: int
    pixel_pitch_m: float   # metric pixel pitch on the sensor
    R_cw: np.ndarray = field(default_factory=lambda: np.eye(3))
    t_cw: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.R_cw = np.ascontiguousarray(self.R_cw, dtype=np.float64)
        self.t_cw = np.ascontiguousarray(self.t_cw, dtype=np.float64).reshape(3)
        if not (self.f_px > 0 and self.baseline_m > 0 and self.pixel_pitch_m > 0):
            raise errors.DimensionMismatch(
                "focal length, baseline and pixel pitch must be positive")
        if not (self.width > 0 and self.height > 0):
            raise errors.DimensionOverflow("image dimensions must be positive")
        if not rotation_is_valid(self.R_cw):
            det = np.linalg.det(self.R_cw)
            if self.R_cw.shape == (3, 3) and det < 0:
                raise errors.ReflectionNotAllowed(
                    f"rotation has determinant {det:.6f}")
            raise errors.DimensionMismatch("R_cw is not a proper rotation")

    @property
    def f_m(self):
        """Metric focal length implied by f_px and the pixel pitch."""
        return self.f_px * self.pixel_pitch_m


@dataclass
class PointCloud:
    """N x 3 points with optional per-point intensity, tagged by frame."""

    points: np.ndarray
    intensity: np.ndarray | None = None
    frame: str = "camera"   # "camera" or "world"

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise errors.DimensionMismatch(
                f"points must be N x 3, got {self.points.shape}")
        if self.intensity is not None:
            self.intensity = np.ascontiguousarray(self.intensity,
                                                  dtype=np.float64).reshape(-1)
            if self.intensity.shape[0] != self.points.shape[0]:
                raise errors.DimensionMismatch(
                    "intensity length does not match point count")
        if self.frame not in ("camera", "world"):
            raise errors.DimensionMismatch(f"unknown frame {self.frame!r}")

    def __len__(self):
        return self.points.shape[0]


@dataclass
class WaveSeries:
    """Uniformly sampled surface-elevation time series at one probe."""

    t0: float
    dt: float
    eta: np.ndarray
    probe_id: str = "probe"
    probe_xy: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.eta = np.ascontiguousarray(self.eta, dtype=np.float64).reshape(-1)
        if self.dt <= 0:
            raise errors.NonuniformSampling(f"dt must be positive, got {self.dt}")
        if not np.all(np.isfinite(self.eta)):
            raise errors.NonuniformSampling("eta contains non-finite samples")

    @property
    def n(self):
        return self.eta.shape[0]

    def times(self):
        return self.t0 + self.dt * np.arange(self.n)


@dataclass
class Plane:
    """Plane in Hessian normal form: n . p = c with |n| = 1."""

    n: np.ndarray
    c: float

    def __post_init__(self):
        self.n = np.ascontiguousarray(self.n, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(self.n)
        if not np.isfinite(norm) or abs(norm - 1.0) > 1e-9:
            raise errors.DimensionMismatch(
                f"plane normal must be unit length, |n| = {norm}")
        self.c = float(self.c)

    def signed_distance(self, points):
        points = np.asarray(points, dtype=np.float64)
        return points @ self.n - self.c
