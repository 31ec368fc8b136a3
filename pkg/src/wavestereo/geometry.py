"""Triangulation and frame transforms for a rectified pinhole pair.

For a rectified pair with baseline B and focal length f (pixels), a left
pixel (u, v) with disparity d maps to camera coordinates

    z = B * f / d,   x = z * (u - u0) / f,   y = z * (v - v0) / f

and to world coordinates via p_w = R_cw @ p_c + t_cw.
"""

from __future__ import annotations

import numpy as np

from . import errors


def depth_from_disparity(d, rig):
    """Depth along the optical axis for disparity d (pixels)."""
    d = np.asarray(d, dtype=np.float64)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise errors.NonpositiveDisparity("disparity must be finite and > 0")
    z = rig.baseline_m * rig.f_px / d
    return float(z) if z.ndim == 0 else z


def disparity_from_depth(z, rig):
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0) or not np.all(np.isfinite(z)):
        raise errors.NonpositiveDepth("depth must be finite and > 0")
    d = rig.baseline_m * rig.f_px / z
    return float(d) if d.ndim == 0 else d


def pixel_to_camera(u, v, z, rig):
    """Back-project left pixel(s) (u, v) at depth z into the left camera
    frame. Returns an array of shape (..., 3)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0) or not np.all(np.isfinite(z)):
        raise errors.NonpositiveDepth("depth must be finite and > 0")
    x = z * (u - rig.u0) / rig.f_px
    y = z * (v - rig.v0) / rig.f_px
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def camera_to_world(p, rig):
    p = np.asarray(p, dtype=np.float64)
    return p @ rig.R_cw.T + rig.t_cw


def world_to_camera(p, rig):
    p = np.asarray(p, dtype=np.float64)
    return (p - rig.t_cw) @ rig.R_cw


def project_camera(p, rig):
    """Project camera-frame point(s) to left-image pixel coordinates (u, v).

    Points must be in front of the camera (z > 0).
    """
    p = np.asarray(p, dtype=np.float64)
    z = p[..., 2]
    if np.any(z <= 0):
        raise errors.NonpositiveDepth("cannot project points with z <= 0")
    u = rig.u0 + rig.f_px * p[..., 0] / z
    v = rig.v0 + rig.f_px * p[..., 1] / z
    return u, v


def right_pixel(u, v, d):
    """Right-image coordinates of a left pixel under disparity d."""
    u = np.asarray(u, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    return u - d, np.asarray(v, dtype=np.float64)
