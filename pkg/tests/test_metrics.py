"""Reprojection metrics against direct-loop reference implementations."""

import math

import numpy as np
import pytest

from wavestereo import errors
from wavestereo.core import DisparityMap, Image
from wavestereo.metrics import (
    MetricReport,
    directed_hausdorff,
    edge_hausdorff,
    edge_points,
    evaluate_disparity,
    modified_hausdorff,
    mse,
    photometric_reproject,
    psnr,
    ssim,
)
from wavestereo.oracle import SceneSpec, render_stereo_pair

from conftest import small_rig, textured


def ssim_reference(a, b, valid=None, max_val=255.0):
    """Literal per-window SSIM: explicit loops, one Gaussian-weighted
    11x11 window at a time, centers restricted to the full-window interior."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    H, W = a.shape
    r = 5
    g = np.exp(-(np.arange(-r, r + 1.0) ** 2) / (2.0 * 1.5 * 1.5))
    g = g / g.sum()
    w2 = np.outer(g, g)
    c1 = (0.01 * max_val) ** 2
    c2 = (0.03 * max_val) ** 2
    if valid is None:
        valid = np.ones((H, W), bool)
    vals = []
    for v in range(r, H - r):
        for u in range(r, W - r):
            if not valid[v, u]:
                continue
            wa = a[v - r:v + r + 1, u - r:u + r + 1]
            wb = b[v - r:v + r + 1, u - r:u + r + 1]
            mua = float((w2 * wa).sum())
            mub = float((w2 * wb).sum())
            saa = float((w2 * wa * wa).sum()) - mua * mua
            sbb = float((w2 * wb * wb).sum()) - mub * mub
            sab = float((w2 * wa * wb).sum()) - mua * mub
            vals.append(((2 * mua * mub + c1) * (2 * sab + c2))
                        / ((mua * mua + mub * mub + c1) * (saa + sbb + c2)))
    return float(np.mean(vals))


def hausdorff_reference(A, B):
    def directed(P, Q):
        mins = np.empty(len(P))
        for i in range(len(P)):
            d2 = ((Q - P[i]) ** 2).sum(axis=1)
            mins[i] = np.sqrt(d2.min())
        return float(np.mean(mins))
    return max(directed(A, B), directed(B, A))


# -------------------------------------------------------------- mse / psnr


def test_mse_and_psnr_hand_case():
    a = textured(12, 12).astype(np.float64)
    b = a + 5.0
    assert mse(a, b) == 25.0
    p = psnr(a, b)
    assert p == 10.0 * math.log10(255.0 ** 2 / 25.0)
    assert p == pytest.approx(34.1514, abs=1e-4)


def test_psnr_identical_is_infinite():
    a = textured(8, 9)
    assert mse(a, a) == 0.0
    assert psnr(a, a) == math.inf


def test_psnr_mse_identity_random_pairs():
    rng = np.random.default_rng(0)
    for seed in range(5):
        a = textured(16, 16, seed=seed)
        b = textured(16, 16, seed=seed + 100)
        valid = rng.random((16, 16)) < 0.7
        m = mse(a, b, valid)
        assert psnr(a, b, valid) == 10.0 * math.log10(255.0 ** 2 / m)


def test_mse_respects_valid_mask():
    a = np.zeros((4, 4))
    b = np.zeros((4, 4))
    b[0, 0] = 8.0
    valid = np.ones((4, 4), bool)
    valid[0, 0] = False
    assert mse(a, b) == 4.0
    assert mse(a, b, valid) == 0.0


def test_mse_validation():
    with pytest.raises(errors.DimensionMismatch):
        mse(np.zeros((3, 3)), np.zeros((3, 4)))
    with pytest.raises(errors.NoValidPixels):
        mse(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3), bool))


# --------------------------------------------------------------------- ssim


def test_ssim_matches_direct_loop():
    a = textured(32, 32, seed=1)
    b = np.clip(a + np.random.default_rng(2).normal(0, 12, (32, 32)), 0, 255)
    assert abs(ssim(a, b) - ssim_reference(a, b)) <= 1e-9


def test_ssim_masked_matches_direct_loop():
    a = textured(32, 32, seed=3)
    b = textured(32, 32, seed=4)
    valid = np.random.default_rng(5).random((32, 32)) < 0.6
    assert abs(ssim(a, b, valid) - ssim_reference(a, b, valid)) <= 1e-9


def test_ssim_identical_images():
    a = textured(20, 24, seed=6)
    assert ssim(a, a) == 1.0


def test_ssim_symmetry():
    a = textured(20, 20, seed=7)
    b = textured(20, 20, seed=8)
    assert ssim(a, b) == ssim(b, a)


def test_ssim_degrades_with_noise():
    a = textured(24, 24, seed=9)
    rng = np.random.default_rng(10)
    weak = np.clip(a + rng.normal(0, 4, a.shape), 0, 255)
    strong = np.clip(a + rng.normal(0, 40, a.shape), 0, 255)
    assert ssim(a, a) > ssim(a, weak) > ssim(a, strong)


def test_ssim_validation():
    with pytest.raises(errors.NoValidPixels):
        ssim(textured(8, 8), textured(8, 8))      # smaller than the window
    a = textured(16, 16)
    with pytest.raises(errors.NoValidPixels):
        ssim(a, a, valid=np.zeros((16, 16), bool))
    with pytest.raises(errors.DimensionMismatch):
        ssim(textured(16, 16), textured(16, 18))
    # valid pixels only on the border: no full window fits there
    edge_only = np.zeros((16, 16), bool)
    edge_only[0, :] = True
    with pytest.raises(errors.NoValidPixels):
        ssim(a, a, valid=edge_only)


# ---------------------------------------------------------------- hausdorff


def test_hausdorff_identical_sets():
    pts = np.array([[0.0, 0.0], [3.0, 4.0], [9.0, 1.0]])
    assert modified_hausdorff(pts, pts) == 0.0


def test_hausdorff_hand_case():
    A = np.array([[0.0, 0.0]])
    B = np.array([[0.0, 4.0], [3.0, 0.0]])
    assert directed_hausdorff(A, B) == 3.0
    assert directed_hausdorff(B, A) == 3.5
    assert modified_hausdorff(A, B) == 3.5


def test_hausdorff_matches_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(5):
        A = rng.integers(0, 50, size=(int(rng.integers(1, 200)), 2)).astype(float)
        B = rng.integers(0, 50, size=(int(rng.integers(1, 200)), 2)).astype(float)
        assert modified_hausdorff(A, B) == hausdorff_reference(A, B)


def test_hausdorff_pure_translation():
    A = np.array([[0.0, 0.0], [0.0, 8.0], [8.0, 0.0], [16.0, 16.0]])
    B = A + np.array([3.0, 0.0])
    # spacing >= 8 guarantees everyone's nearest neighbour is its own shift
    assert modified_hausdorff(A, B) == 3.0


def test_hausdorff_empty_set():
    with pytest.raises(errors.EmptyEdgeSet):
        directed_hausdorff(np.empty((0, 2)), np.array([[1.0, 1.0]]))


# -------------------------------------------------------------------- edges


def blob_image(centers, shape=(40, 40)):
    img = np.zeros(shape, np.float64)
    for r, c in centers:
        img[r, c] = 200.0
    return img


def test_edge_points_translation_equivariant():
    centers = [(10, 10), (15, 25), (25, 15)]
    img = blob_image(centers)
    moved = blob_image([(r + 2, c + 3) for r, c in centers])
    base = {tuple(p) for p in edge_points(img)}
    shifted = {tuple(p) for p in edge_points(moved)}
    assert shifted == {(r + 2.0, c + 3.0) for r, c in base}
    assert len(base) > 0


def test_edge_hausdorff_constant_image_has_no_edges():
    flat = np.full((20, 20), 9.0)
    with pytest.raises(errors.EmptyEdgeSet):
        edge_hausdorff(flat, flat)


def test_edge_points_needs_valid_pixels():
    with pytest.raises(errors.NoValidPixels):
        edge_points(textured(6, 6), valid=np.zeros((6, 6), bool))


# ------------------------------------------------------------- reprojection


def test_photometric_reproject_constant_shift():
    c = 3
    w = 20
    left = textured(6, w, seed=12)
    dmap = DisparityMap(d=np.full((6, w), float(c), np.float32),
                        mask=np.ones((6, w), bool))
    warped, valid = photometric_reproject(left, dmap)
    # visible sources are u >= c+1 (Q > 0), landing on targets 1 .. w-1-c
    assert np.array_equal(warped[:, 1:w - c], left[:, 1 + c:])
    assert valid[:, 1:w - c].all()
    assert not valid[:, 0].any() and not valid[:, w - c:].any()


def test_photometric_reproject_all_masked():
    left = textured(6, 10)
    dmap = DisparityMap(d=np.full((6, 10), np.nan, np.float32),
                        mask=np.zeros((6, 10), bool))
    warped, valid = photometric_reproject(left, dmap)
    assert not valid.any()
    with pytest.raises(errors.NoValidPixels):
        evaluate_disparity(Image(left), Image(left), dmap)


def test_evaluate_disparity_on_rendered_truth():
    spec = SceneSpec(rig=small_rig())
    left, right, gt = render_stereo_pair(spec, 0.0)
    report = evaluate_disparity(left, right, gt.disparity)
    assert report.mse <= 2 * spec.noise_sigma ** 2 + 1.0
    assert report.ssim >= 0.9
    assert report.psnr == 10.0 * math.log10(255.0 ** 2 / report.mse)
    assert report.hausdorff < 5.0
    assert report.evaluated_pixel_count > 0.3 * spec.rig.width * spec.rig.height
    assert report.occluded_excluded


def test_truth_beats_perturbed_truth():
    spec = SceneSpec(rig=small_rig())
    left, right, gt = render_stereo_pair(spec, 0.0)
    base = evaluate_disparity(left, right, gt.disparity)
    rng = np.random.default_rng(13)
    noisy_d = gt.disparity.d + rng.normal(0.0, 1.0, gt.disparity.d.shape) \
        .astype(np.float32)
    noisy = evaluate_disparity(
        left, right, DisparityMap(d=noisy_d, mask=gt.disparity.mask.copy()))
    assert noisy.mse > base.mse
    assert noisy.psnr < base.psnr
    assert noisy.ssim < base.ssim
    assert noisy.hausdorff >= base.hausdorff


def test_uniform_disparity_error_hurts_mse():
    spec = SceneSpec(rig=small_rig())
    left, right, gt = render_stereo_pair(spec, 0.0)
    base = evaluate_disparity(left, right, gt.disparity)
    off = evaluate_disparity(
        left, right,
        DisparityMap(d=gt.disparity.d + 1.0, mask=gt.disparity.mask.copy()))
    assert off.mse > base.mse


def test_metric_report_serialization():
    rep = MetricReport(ssim=0.5, psnr=math.inf, mse=0.0, hausdorff=1.5,
                       evaluated_pixel_count=10)
    d = rep.to_dict()
    assert d["psnr"] == "inf"
    assert d["mse"] == 0.0 and d["hausdorff"] == 1.5
    rep2 = MetricReport(ssim=0.5, psnr=30.0, mse=65.0, hausdorff=0.0,
                        evaluated_pixel_count=3, occluded_excluded=False)
    d2 = rep2.to_dict()
    assert d2["psnr"] == 30.0 and not d2["occluded_excluded"]
