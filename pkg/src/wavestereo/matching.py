"""Baseline stereo matcher: census transform, Hamming cost volume,
semi-global aggregation, winner-take-all with parabola subpixel refinement
and a left-right consistency check.

The right-image disparity for the consistency check comes from matching the
horizontally mirrored pair, which reuses the left-referenced code path
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors, _sgm
from .core import DisparityMap, Image
from .formats import read_pfm

_WINDOWS = (3, 5, 7)


@dataclass
class MatchParams:
    """Knobs for the census/SGM matcher.

    p1/p2 default to 8 and 96 for the 24-bit (5x5) census and scale linearly
    with the actual census bit count when left unset.
    """

    d_min: int
    d_max: int
    census_window: int = 5
    p1: int | None = None
    p2: int | None = None
    paths: int = 4
    subpixel: bool = True
    lr_threshold: float = 1.0

    def __post_init__(self):
        if not 0 <= self.d_min < self.d_max:
            raise errors.BadMatchParams(
                f"need 0 <= d_min < d_max, got [{self.d_min}, {self.d_max}]")
        if self.census_window not in _WINDOWS:
            raise errors.BadMatchParams(
                f"census_window must be one of {_WINDOWS}")
        if self.paths not in (2, 4, 8):
            raise errors.BadMatchParams("paths must be 2, 4 or 8")
        if self.lr_threshold <= 0:
            raise errors.BadMatchParams("lr_threshold must be positive")
        bits = self.census_bits
        if self.p1 is None:
            self.p1 = max(1, round(8 * bits / 24))
        if self.p2 is None:
            self.p2 = round(96 * bits / 24)
        if not 0 < self.p1 <= self.p2:
            raise errors.BadMatchParams(
                f"need 0 < p1 <= p2, got p1={self.p1} p2={self.p2}")

    @property
    def census_bits(self):
        return self.census_window * self.census_window - 1


def census_transform(image, window=5):
    """Per-pixel census signature: bit set where neighbor < center.

    Borders use edge replication, so border signatures are partially
    degenerate; downstream masking handles them.
    """
    if window not in _WINDOWS:
        raise errors.BadMatchParams(f"census window must be one of {_WINDOWS}")
    px = image.pixels if isinstance(image, Image) else np.asarray(image)
    px = px.astype(np.float32, copy=False)
    r = window // 2
    padded = np.pad(px, r, mode="edge")
    H, W = px.shape
    sig = np.zeros((H, W), dtype=np.uint64)
    bit = np.uint64(1)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            neigh = padded[r + dy:r + dy + H, r + dx:r + dx + W]
            sig |= bit * (neigh < px)
            bit <<= np.uint64(1)
    return sig


def census_cost_volume(left, right, params):
    """Hamming-distance cost volume, shape (H, W, d_max - d_min + 1).

    Out-of-bounds right samples get the maximal cost (census bits + 1).
    Textureless inputs produce an all-equal volume; winner selection flags
    those pixels as low confidence.
    """
    if left.pixels.shape != right.pixels.shape:
        raise errors.DimensionMismatch(
            f"left {left.pixels.shape} vs right {right.pixels.shape}")
    cl = census_transform(left, params.census_window)
    cr = census_transform(right, params.census_window)
    H, W = cl.shape
    D = params.d_max - params.d_min + 1
    max_cost = params.census_bits + 1
    cost = np.full((H, W, D), max_cost, dtype=np.uint8)
    for i, d in enumerate(range(params.d_min, params.d_max + 1)):
        if d >= W:
            break
        src = cr[:, :W - d] if d > 0 else cr
        cost[:, d:, i] = np.bitwise_count(cl[:, d:] ^ src)
    return cost


def sgm_aggregate(cost, params, p1=None, p2=None, paths=None):
    """Semi-global path aggregation; see _sgm for the recurrence.

    p1/p2/paths override the params values when given (p1 = p2 = 0 turns the
    recurrence into paths * raw cost, handy for checks).
    """
    p1 = params.p1 if p1 is None else p1
    p2 = params.p2 if p2 is None else p2
    paths = params.paths if paths is None else paths
    if paths not in (2, 4, 8):
        raise errors.BadMatchParams("paths must be 2, 4 or 8")
    if p1 < 0 or p2 < p1:
        raise errors.BadMatchParams(f"need 0 <= p1 <= p2, got {p1}, {p2}")
    return _sgm.aggregate(cost, p1, p2, paths)


def wta_disparity(volume, params):
    """Winner-take-all over the aggregated volume.

    Ties break toward smaller disparity. With subpixel on, a parabola
    through the three costs around the winner refines it, clamped to
    +/- 0.5 px. Pixels with a completely flat cost curve (aperture problem:
    uniform input) and nonpositive refined disparities are masked.
    """
    vol = np.asarray(volume)
    H, W, D = vol.shape
    idx = np.argmin(vol, axis=2)
    flat = vol.max(axis=2) == vol.min(axis=2)
    d = (params.d_min + idx).astype(np.float32)
    if params.subpixel and D >= 3:
        i = np.clip(idx, 1, D - 2)
        rows, cols = np.ogrid[:H, :W]
        c0 = vol[rows, cols, i].astype(np.float64)
        cm = vol[rows, cols, i - 1].astype(np.float64)
        cp = vol[rows, cols, i + 1].astype(np.float64)
        denom = cm - 2.0 * c0 + cp
        interior = (idx >= 1) & (idx <= D - 2) & (denom > 0)
        delta = np.zeros((H, W))
        np.divide(0.5 * (cm - cp), denom, out=delta, where=interior)
        d += np.clip(delta, -0.5, 0.5).astype(np.float32)
    mask = ~flat & (d > 0)
    d[~mask] = np.nan
    return DisparityMap(d=d, mask=mask)


def _raw_disparity(left, right, params):
    cost = census_cost_volume(left, right, params)
    agg = sgm_aggregate(cost, params)
    return wta_disparity(agg, params)


def match_pair(left, right, params):
    """Full matching pipeline including the left-right consistency check."""
    dl = _raw_disparity(left, right, params)
    # mirrored pair: right image becomes the left-referenced one
    ml = Image(left.pixels[:, ::-1])
    mr = Image(right.pixels[:, ::-1])
    dr_m = _raw_disparity(mr, ml, params)
    dr = dr_m.d[:, ::-1]
    dr_mask = dr_m.mask[:, ::-1]

    H, W = dl.d.shape
    u = np.arange(W)[None, :]
    with np.errstate(invalid="ignore"):
        ur = np.rint(u - dl.d).astype(np.int64)
    ok = dl.mask & (ur >= 0) & (ur < W)
    ur_safe = np.clip(ur, 0, W - 1)
    rows = np.arange(H)[:, None]
    dr_at = dr[rows, ur_safe]
    ok &= dr_mask[rows, ur_safe]
    with np.errstate(invalid="ignore"):
        ok &= np.abs(dl.d - dr_at) <= params.lr_threshold
    d = dl.d.copy()
    d[~ok] = np.nan
    return DisparityMap(d=d, mask=ok)


def ingest_external_disparity(path, width, height, params):
    """Load a PFM disparity produced elsewhere and validate it.

    Non-finite values and values outside [d_min, d_max] (or nonpositive)
    are masked. Raises AllMasked when nothing survives.
    """
    arr, _ = read_pfm(path)
    if arr.shape != (height, width):
        raise errors.DimensionMismatch(
            f"expected {height}x{width}, file has {arr.shape[0]}x{arr.shape[1]}")
    with np.errstate(invalid="ignore"):
        mask = np.isfinite(arr) & (arr > 0) \
            & (arr >= params.d_min) & (arr <= params.d_max)
    if not mask.any():
        raise errors.AllMasked("no disparity values inside the valid range")
    return DisparityMap(d=arr, mask=mask)
