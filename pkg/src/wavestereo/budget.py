"""First-order triangulation error budget for a rectified rig.

A matching error of e pixels splits evenly between the two views, so the
disparity error is e / sqrt(2). Depth and lateral errors follow by
linearizing the triangulation equations. Camera-frame errors are rotated
into the world frame as a stacked vector and reported as componentwise
absolute values; no covariance propagation is attempted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import errors
from .core import StereoRig

SQRT2 = math.sqrt(2.0)


def disparity_sigma(e=1.0):
    return e / SQRT2


def depth_error(z, rig: StereoRig, e=1.0):
    """Linearized depth error for a matching error of e pixels."""
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise errors.NonpositiveDepth("z must be > 0")
    return z * z * e / (SQRT2 * rig.baseline_m * rig.f_px)


def quantization_errors(z, rig: StereoRig, e=1.0, u=None, v=None):
    """(e_x, e_y, e_z) in metres, camera frame.

    u, v are pixel coordinates of the evaluation point (default: principal
    point). The lateral terms use the sensor-metric offsets
    x' = (u - u0) * pixel_pitch so that x'/baseline is dimensionless.
    """
    if e <= 0:
        raise errors.InputError("positioning error e must be > 0")
    z = np.asarray(z, dtype=np.float64)
    e_z = depth_error(z, rig, e=e)
    if u is None:
        u = rig.u0
    if v is None:
        v = rig.v0
    xp = (np.asarray(u, dtype=np.float64) - rig.u0) * rig.pixel_pitch_m
    yp = (np.asarray(v, dtype=np.float64) - rig.v0) * rig.pixel_pitch_m
    base = z / rig.f_px * e
    e_x = base * np.sqrt(1.0 + (xp / (SQRT2 * rig.baseline_m)) ** 2)
    e_y = base * np.sqrt(1.0 + (yp / (SQRT2 * rig.baseline_m)) ** 2)
    return e_x, e_y, e_z


def world_errors(e_x, e_y, e_z, rig: StereoRig):
    """Rotate the stacked camera-frame error vector into the world frame.

    Errors are magnitudes, so the rotated components are reported as
    absolute values (worst case over sign choices would be |R| @ e; the
    convention here follows the stacked-vector rotation).
    """
    v = np.stack(np.broadcast_arrays(
        np.asarray(e_x, dtype=np.float64),
        np.asarray(e_y, dtype=np.float64),
        np.asarray(e_z, dtype=np.float64)), axis=-1)
    w = np.abs(v @ rig.R_cw.T)
    return w[..., 0], w[..., 1], w[..., 2]


@dataclass
class ErrorBudget:
    z: float
    e_x: float
    e_y: float
    e_z: float
    e_xw: float
    e_yw: float
    e_zw: float
    e: float = 1.0

    def to_dict(self):
        return {k: getattr(self, k)
                for k in ("z", "e_x", "e_y", "e_z", "e_xw", "e_yw", "e_zw", "e")}


def budget_table(rig: StereoRig, z_min, z_max, n_samples=21, e=1.0):
    """Budgets sampled uniformly in z at the principal point."""
    if not (0 < z_min < z_max):
        raise errors.BadRange(f"need 0 < z_min < z_max, got [{z_min}, {z_max}]")
    if n_samples < 2:
        raise errors.BadRange("need at least 2 samples")
    rows = []
    for z in np.linspace(z_min, z_max, int(n_samples)):
        e_x, e_y, e_z = quantization_errors(float(z), rig, e=e)
        e_xw, e_yw, e_zw = world_errors(e_x, e_y, e_z, rig)
        rows.append(ErrorBudget(float(z), float(e_x), float(e_y), float(e_z),
                                float(e_xw), float(e_yw), float(e_zw), e))
    return rows


def write_budget_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["z", "e_x", "e_y", "e_z", "e_xw", "e_yw", "e_zw"])
        for r in rows:
            w.writerow([f"{val:.17g}" for val in
                        (r.z, r.e_x, r.e_y, r.e_z, r.e_xw, r.e_yw, r.e_zw)])
