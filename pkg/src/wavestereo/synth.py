"""Training-tuple synthesis for adapting a stereo network to thermal data.

Given a real left/right thermal pair and a relative depth grid L for the
left image (e.g. from a monocular estimator), three steps build a training
tuple with a dense pseudo ground-truth disparity:

1. min-max normalize L onto a target disparity range (all pixels valid);
2. mark pixels that the synthetic disparity makes invisible in the right
   view (out of view, or a pixel further right lands in the same column);
3. forward-warp the left image into a synthetic right view, nearer pixels
   winning collisions, holes filled from the real right image.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .core import DisparityMap, Image
from .formats import read_pfm, read_pgm, write_pfm, write_pgm


def depth_to_disparity(rel_depth, d_min, d_max, constant_fill=False):
    """Min-max normalize a relative depth grid onto [d_min, d_max].

    The input convention is 'larger value = nearer' (inverse depth), so the
    output is a monotone remap: nearer pixels get larger disparity. All
    output pixels are valid. A constant grid is an error unless
    constant_fill is set, in which case every pixel gets d_min.
    """
    L = np.asarray(rel_depth, dtype=np.float64)
    if L.ndim != 2:
        raise errors.DimensionMismatch(f"depth grid must be 2-D, got {L.shape}")
    if not np.all(np.isfinite(L)):
        raise errors.DegenerateRange("depth grid contains non-finite values")
    if not 0 <= d_min < d_max:
        raise errors.BadMatchParams(
            f"need 0 <= d_min < d_max, got [{d_min}, {d_max}]")
    if d_min <= 0:
        # valid disparities must stay strictly positive
        raise errors.BadMatchParams("d_min must be positive for synthesis")
    lo = L.min()
    hi = L.max()
    if hi - lo <= 0:
        if constant_fill:
            d = np.full(L.shape, d_min, dtype=np.float32)
            return DisparityMap(d=d, mask=np.ones(L.shape, dtype=bool))
        raise errors.DegenerateRange("constant depth grid cannot be normalized")
    norm = (L - lo) / (hi - lo)
    d = norm * (d_max - d_min) + d_min
    return DisparityMap(d=d.astype(np.float32),
                        mask=np.ones(L.shape, dtype=bool))


def occlusion_mask(disparity):
    """Visibility in the right view implied by a dense left disparity grid.

    A pixel at column u with disparity d lands at Q = u - d in the right
    image. It is visible iff Q > 0 and, for examined columns u <= W-3, no
    column to its right (u+1 .. W-1) lands in the same integer right-image
    column floor(Q). The last two columns only carry the Q > 0 criterion.

    Accepts a raw 2-D array or a DisparityMap (its d grid is used; the grid
    must be fully finite). Returns a boolean grid, True = visible.
    """
    if isinstance(disparity, DisparityMap):
        d = disparity.d
    else:
        d = np.asarray(disparity)
    d = d.astype(np.float64, copy=False)
    if d.ndim != 2:
        raise errors.DimensionMismatch(f"disparity must be 2-D, got {d.shape}")
    if not np.all(np.isfinite(d)):
        raise errors.DimensionMismatch("occlusion test needs a dense grid")
    H, W = d.shape
    q = np.arange(W, dtype=np.float64)[None, :] - d
    mask = q > 0
    q_down = np.floor(q)
    for i in range(0, W - 2):
        collide = np.any(q_down[:, i + 1:] == q_down[:, i:i + 1], axis=1)
        mask[:, i] &= ~collide
    return mask


def forward_warp(left, disparity, visible=None):
    """Splat the left image into the right view along disparity.

    Targets are round(u - d); on collisions the larger disparity (nearer
    surface) wins, ties resolved toward the smaller source column. Returns
    (warped float grid, hole mask) where holes are never-splatted pixels.
    """
    px = left.pixels if isinstance(left, Image) else np.asarray(left)
    if isinstance(disparity, DisparityMap):
        d = disparity.d
        dmask = disparity.mask
    else:
        d = np.asarray(disparity, dtype=np.float32)
        dmask = np.isfinite(d)
    if px.shape != d.shape:
        raise errors.DimensionMismatch(
            f"image {px.shape} vs disparity {d.shape}")
    if visible is not None:
        dmask = dmask & visible
    H, W = px.shape
    u = np.arange(W)[None, :]
    with np.errstate(invalid="ignore"):
        target = np.rint(u - d)
    ok = dmask & np.isfinite(target) & (target >= 0) & (target <= W - 1)
    rows, cols = np.nonzero(ok)
    tcol = target[rows, cols].astype(np.int64)
    tflat = rows * W + tcol
    dval = d[rows, cols]
    # sort by (target, -d, source column): first entry per target wins
    order = np.lexsort((cols, -dval, tflat))
    tsorted = tflat[order]
    uniq, first = np.unique(tsorted, return_index=True)
    winners = order[first]
    out = np.zeros((H, W), dtype=np.float32)
    holes = np.ones((H, W), dtype=bool)
    out.reshape(-1)[uniq] = px[rows[winners], cols[winners]]
    holes.reshape(-1)[uniq] = False
    return out, holes


def fill_holes(warped, holes, real_right):
    """Replace hole pixels with samples from the real right image."""
    rr = real_right.pixels if isinstance(real_right, Image) else np.asarray(real_right)
    if warped.shape != rr.shape or holes.shape != rr.shape:
        raise errors.DimensionMismatch("shape mismatch in hole filling")
    out = warped.copy()
    out[holes] = rr[holes]
    return out


@dataclass
class TrainingTuple:
    """One synthesized training sample.

    ``occlusion`` is the visibility grid from the synthetic disparity
    (True = the left pixel is visible in the right view); training excludes
    False pixels from photometric losses.
    """

    left: Image
    right_fake: Image
    disparity: DisparityMap
    occlusion: np.ndarray


def synthesize_tuple(left, right, rel_depth, d_min, d_max):
    """Build a TrainingTuple from a real pair and a relative depth grid."""
    dmap = depth_to_disparity(rel_depth, d_min, d_max)
    vis = occlusion_mask(dmap.d)
    warped, holes = forward_warp(left, dmap, visible=vis)
    fake = fill_holes(warped, holes, right)
    return TrainingTuple(left=left, right_fake=Image(fake),
                         disparity=dmap, occlusion=vis)


@dataclass
class AdaptManifest:
    """Fine-tuning recipe stored alongside an exported dataset."""

    tuple_paths: list = field(default_factory=list)
    batch_size: int = 2
    max_iterations: int = 20000
    crop_h: int = 320
    crop_w: int = 512
    shuffle_seed: int = 0
    pretrained_init: bool = True

    def validate(self, height, width):
        if self.batch_size <= 0 or self.max_iterations <= 0:
            raise errors.BadMatchParams("batch size and iterations must be > 0")
        if not (0 < self.crop_h <= height and 0 < self.crop_w <= width):
            raise errors.DimensionMismatch(
                f"crop {self.crop_h}x{self.crop_w} exceeds "
                f"image {height}x{width}")

    def to_dict(self):
        return {
            "tuples": self.tuple_paths,
            "batch_size": self.batch_size,
            "max_iterations": self.max_iterations,
            "crop": [self.crop_h, self.crop_w],
            "shuffle_seed": self.shuffle_seed,
            "pretrained_init": self.pretrained_init,
        }


def export_dataset(tuples, out_dir, shuffle_seed=0, manifest=None):
    """Write tuples as NNNN_{left,right_fake}.pgm / NNNN_disp.pfm /
    NNNN_occ.pgm plus manifest.json.

    The manifest lists tuples in an order shuffled by shuffle_seed so
    training epochs are reproducible. Occlusion PGMs store 255 = visible.
    """
    os.makedirs(out_dir, exist_ok=True)
    if manifest is None:
        manifest = AdaptManifest()
    manifest.shuffle_seed = shuffle_seed
    names = []
    for i, tup in enumerate(tuples):
        manifest.validate(tup.left.height, tup.left.width)
        stem = f"{i:04d}"
        write_pgm(os.path.join(out_dir, f"{stem}_left.pgm"), tup.left)
        write_pgm(os.path.join(out_dir, f"{stem}_right_fake.pgm"),
                  tup.right_fake)
        write_pfm(os.path.join(out_dir, f"{stem}_disp.pfm"), tup.disparity.d)
        write_pgm(os.path.join(out_dir, f"{stem}_occ.pgm"),
                  Image(tup.occlusion.astype(np.float32) * 255.0))
        names.append({
            "left": f"{stem}_left.pgm",
            "right_fake": f"{stem}_right_fake.pgm",
            "disparity": f"{stem}_disp.pfm",
            "occlusion": f"{stem}_occ.pgm",
        })
    rng = np.random.default_rng(shuffle_seed)
    order = rng.permutation(len(names))
    manifest.tuple_paths = [names[int(j)] for j in order]
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest.to_dict(), f, indent=2)
        f.write("\n")
    return path


def load_tuple(out_dir, index):
    """Re-read one exported tuple (see export_dataset naming)."""
    stem = f"{index:04d}"
    left = read_pgm(os.path.join(out_dir, f"{stem}_left.pgm"))
    fake = read_pgm(os.path.join(out_dir, f"{stem}_right_fake.pgm"))
    d, _ = read_pfm(os.path.join(out_dir, f"{stem}_disp.pfm"))
    occ = read_pgm(os.path.join(out_dir, f"{stem}_occ.pgm"))
    vis = occ.pixels > 127
    return TrainingTuple(left=left, right_fake=fake,
                         disparity=DisparityMap(d=d, mask=np.ones_like(vis)),
                         occlusion=vis)
