"""Reprojection-based evaluation of disparity maps without ground truth.

The left image is forward-warped by the candidate disparity into a synthetic
right view and compared against the real right image with MSE, PSNR, SSIM
and a modified Hausdorff distance between Sobel edge sets. Occluded pixels
(per the disparity's own geometry) and warp holes are excluded; for window
and edge context only, excluded pixels take the real right-image values,
which keeps them neutral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import errors
from .core import Image
from .synth import forward_warp, occlusion_mask

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _as_array(img):
    a = img.pixels if isinstance(img, Image) else np.asarray(img)
    return a.astype(np.float64, copy=False)


def photometric_reproject(left, dmap):
    """Forward-warp left into the right view along dmap.

    Occluded pixels (dmap's own geometry, via the visibility test) are not
    splatted. Returns (warped float grid, valid grid); invalid = holes.
    """
    d = dmap.d.copy()
    mask = dmap.mask
    W = dmap.width
    d[~mask] = W + 1.0          # lands outside; never splatted, never collides
    vis = occlusion_mask(d) & mask
    warped, holes = forward_warp(_as_array(left).astype(np.float32), d,
                                 visible=vis)
    return warped.astype(np.float64), ~holes


def mse(a, b, valid=None):
    a = _as_array(a)
    b = _as_array(b)
    if a.shape != b.shape:
        raise errors.DimensionMismatch(f"{a.shape} vs {b.shape}")
    if valid is None:
        valid = np.ones(a.shape, dtype=bool)
    if not valid.any():
        raise errors.NoValidPixels("no valid pixels for MSE")
    diff = a[valid] - b[valid]
    return float(np.mean(diff * diff))


def psnr(a, b, valid=None, max_val=255.0):
    """Peak signal-to-noise ratio in dB; +inf for identical inputs."""
    m = mse(a, b, valid)
    if m == 0:
        return math.inf
    return 10.0 * math.log10(max_val * max_val / m)


def _gaussian_1d(n=SSIM_WINDOW, sigma=SSIM_SIGMA):
    r = n // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _windowed(a, g):
    # separable Gaussian-weighted window sums
    tmp = ndimage.correlate1d(a, g, axis=0, mode="constant")
    return ndimage.correlate1d(tmp, g, axis=1, mode="constant")


def ssim(a, b, valid=None, max_val=255.0):
    """Mean SSIM over windows with a valid center.

    11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03. Window centers
    are restricted to the interior where the full window fits.
    """
    a = _as_array(a)
    b = _as_array(b)
    if a.shape != b.shape:
        raise errors.DimensionMismatch(f"{a.shape} vs {b.shape}")
    H, W = a.shape
    r = SSIM_WINDOW // 2
    if H < SSIM_WINDOW or W < SSIM_WINDOW:
        raise errors.NoValidPixels("image smaller than the SSIM window")
    if valid is None:
        valid = np.ones(a.shape, dtype=bool)
    g = _gaussian_1d()
    mu_a = _windowed(a, g)
    mu_b = _windowed(b, g)
    s_aa = _windowed(a * a, g) - mu_a * mu_a
    s_bb = _windowed(b * b, g) - mu_b * mu_b
    s_ab = _windowed(a * b, g) - mu_a * mu_b
    c1 = (SSIM_K1 * max_val) ** 2
    c2 = (SSIM_K2 * max_val) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * s_ab + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (s_aa + s_bb + c2)
    smap = num / den
    centers = np.zeros(a.shape, dtype=bool)
    centers[r:H - r, r:W - r] = True
    centers &= valid
    if not centers.any():
        raise errors.NoValidPixels("no valid window centers for SSIM")
    return float(smap[centers].mean())


def directed_hausdorff(points_a, points_b):
    """Mean over a of the distance to the nearest b (modified directed HD)."""
    A = np.asarray(points_a, dtype=np.float64)
    B = np.asarray(points_b, dtype=np.float64)
    if A.size == 0 or B.size == 0:
        raise errors.EmptyEdgeSet("empty point set")
    A = A.reshape(len(A), -1)
    B = B.reshape(len(B), -1)
    mins = np.empty(len(A))
    chunk = max(1, int(4_000_000 // max(len(B), 1)))
    for i in range(0, len(A), chunk):
        part = A[i:i + chunk]
        d2 = ((part[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
        mins[i:i + chunk] = np.sqrt(d2.min(axis=1))
    return float(np.mean(mins))


def modified_hausdorff(points_a, points_b):
    return max(directed_hausdorff(points_a, points_b),
               directed_hausdorff(points_b, points_a))


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)


def edge_points(img, valid=None):
    """Edge pixels as (row, col) points: Sobel magnitude above the
    mean + 2 std of the magnitude over valid pixels."""
    a = _as_array(img)
    if valid is None:
        valid = np.ones(a.shape, dtype=bool)
    gx = ndimage.convolve(a, _SOBEL_X, mode="reflect")
    gy = ndimage.convolve(a, _SOBEL_X.T, mode="reflect")
    mag = np.hypot(gx, gy)
    if not valid.any():
        raise errors.NoValidPixels("no valid pixels for edge extraction")
    sel = mag[valid]
    thresh = sel.mean() + 2.0 * sel.std()
    edges = (mag > thresh) & valid
    return np.argwhere(edges).astype(np.float64)


def edge_hausdorff(a, b, valid=None):
    """Modified Hausdorff distance between the Sobel edge sets of a and b."""
    pa = edge_points(a, valid)
    pb = edge_points(b, valid)
    if pa.size == 0 or pb.size == 0:
        raise errors.EmptyEdgeSet("thresholding left no edge pixels")
    return modified_hausdorff(pa, pb)


@dataclass
class MetricReport:
    ssim: float
    psnr: float
    mse: float
    hausdorff: float
    evaluated_pixel_count: int
    occluded_excluded: bool = True

    def to_dict(self):
        return {
            "ssim": self.ssim,
            "psnr": "inf" if math.isinf(self.psnr) else self.psnr,
            "mse": self.mse,
            "hausdorff": self.hausdorff,
            "evaluated_pixel_count": self.evaluated_pixel_count,
            "occluded_excluded": self.occluded_excluded,
        }


def evaluate_disparity(left, right, dmap, max_val=255.0):
    """MetricReport for a disparity map against a real right image."""
    rightpx = _as_array(right)
    warped, valid = photometric_reproject(left, dmap)
    if not valid.any():
        raise errors.NoValidPixels("reprojection produced no valid pixels")
    # excluded pixels take right-image values: neutral window/edge context
    filled = np.where(valid, warped, rightpx)
    return MetricReport(
        ssim=ssim(filled, rightpx, valid, max_val=max_val),
        psnr=psnr(warped, rightpx, valid, max_val=max_val),
        mse=mse(warped, rightpx, valid),
        hausdorff=edge_hausdorff(filled, rightpx, valid),
        evaluated_pixel_count=int(valid.sum()),
    )
