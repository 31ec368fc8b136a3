"""Triangulation core checked against an independent two-ray oracle."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavestereo import errors
from wavestereo.core import StereoRig
from wavestereo.geometry import (
    camera_to_world,
    depth_from_disparity,
    disparity_from_depth,
    pixel_to_camera,
    project_camera,
    right_pixel,
    world_to_camera,
)
from wavestereo.oracle import default_rig

RIG = StereoRig(f_px=705.8823529411765, baseline_m=0.06, u0=319.5, v0=255.5,
                width=640, height=512, pixel_pitch_m=17e-6)


def midpoint_triangulate(u, v, d, rig):
    """Independent oracle: intersect the two viewing rays directly.

    Left ray from the origin, right ray from (B, 0, 0), both through their
    respective pixels; solve for the closest points and take the midpoint.
    For a rectified pair the rays meet exactly, so the midpoint is the
    intersection.
    """
    o_l = np.zeros(3)
    o_r = np.array([rig.baseline_m, 0.0, 0.0])
    r_l = np.array([(u - rig.u0) / rig.f_px, (v - rig.v0) / rig.f_px, 1.0])
    r_r = np.array([(u - d - rig.u0) / rig.f_px, (v - rig.v0) / rig.f_px, 1.0])
    # least squares for [s, t] in  o_l + s r_l  ~  o_r + t r_r
    A = np.column_stack([r_l, -r_r])
    s, t = np.linalg.lstsq(A, o_r - o_l, rcond=None)[0]
    return 0.5 * ((o_l + s * r_l) + (o_r + t * r_r))


def test_depth_hand_example():
    z = depth_from_disparity(70.5882, RIG)
    assert z == pytest.approx(0.6000, abs=1e-4)


def test_depth_inverse_proportionality():
    z1 = depth_from_disparity(17.3, RIG)
    z2 = depth_from_disparity(34.6, RIG)
    assert z2 == pytest.approx(z1 / 2.0, rel=1e-15)


@pytest.mark.parametrize("d", [0.0, -3.0, float("nan"), float("inf")])
def test_depth_rejects_nonpositive(d):
    with pytest.raises(errors.NonpositiveDisparity):
        depth_from_disparity(d, RIG)


@given(st.floats(1.0, 512.0))
def test_depth_disparity_identity(d):
    z = depth_from_disparity(d, RIG)
    assert disparity_from_depth(z, RIG) == pytest.approx(d, rel=1e-12)


def test_disparity_from_depth_rejects_nonpositive():
    with pytest.raises(errors.NonpositiveDepth):
        disparity_from_depth(0.0, RIG)


def test_pixel_to_camera_principal_ray():
    np.testing.assert_allclose(pixel_to_camera(RIG.u0, RIG.v0, 0.37, RIG),
                               [0, 0, 0.37], atol=1e-15)


def test_pixel_to_camera_hand_example():
    p = pixel_to_camera(RIG.u0 + RIG.f_px, RIG.v0, 0.6, RIG)
    np.testing.assert_allclose(p, [0.6, 0.0, 0.6], atol=1e-12)


def test_pixel_to_camera_homogeneity():
    p1 = pixel_to_camera(401.0, 77.0, 0.5, RIG)
    p3 = pixel_to_camera(401.0, 77.0, 1.5, RIG)
    np.testing.assert_allclose(p3, 3.0 * p1, rtol=1e-13)


def test_pixel_to_camera_rejects_nonpositive_depth():
    with pytest.raises(errors.NonpositiveDepth):
        pixel_to_camera(100.0, 100.0, 0.0, RIG)


def test_camera_world_identity_pose():
    p = np.array([0.1, -0.2, 0.9])
    np.testing.assert_array_equal(camera_to_world(p, RIG), p)


def test_camera_world_round_trip():
    rig = default_rig()
    p = np.array([0.31, -0.12, 0.77])
    back = world_to_camera(camera_to_world(p, rig), rig)
    np.testing.assert_allclose(back, p, atol=1e-12)


def test_tilt_rotation_hand_trigonometry():
    # 22.8 degrees about x applied to the optical axis (0, 0, 1)
    tau = np.deg2rad(22.8)
    R = np.array([[1, 0, 0],
                  [0, np.cos(tau), -np.sin(tau)],
                  [0, np.sin(tau), np.cos(tau)]])
    rig = StereoRig(f_px=700.0, baseline_m=0.06, u0=0, v0=0, width=8,
                    height=8, pixel_pitch_m=17e-6, R_cw=R)
    out = camera_to_world(np.array([0.0, 0.0, 1.0]), rig)
    np.testing.assert_allclose(out, [0.0, -0.38752, 0.92186], atol=5e-6)


def test_right_pixel_identity_and_shift():
    assert right_pixel(100.0, 50.0, 0.0) == (100.0, 50.0)
    assert right_pixel(100.0, 50.0, 12.5) == (87.5, 50.0)


def test_triangulation_matches_two_ray_oracle():
    rng = np.random.default_rng(11)
    for _ in range(300):
        u = rng.uniform(0, RIG.width - 1)
        v = rng.uniform(0, RIG.height - 1)
        d = rng.uniform(1.0, 200.0)
        z = depth_from_disparity(d, RIG)
        p = pixel_to_camera(u, v, z, RIG)
        q = midpoint_triangulate(u, v, d, RIG)
        assert np.linalg.norm(np.asarray(p) - q) < 1e-9


def test_left_right_rays_reconverge():
    # triangulating from the right camera's pixel must land on the same point
    rng = np.random.default_rng(5)
    for _ in range(100):
        u = rng.uniform(10, 600)
        v = rng.uniform(10, 500)
        d = rng.uniform(5.0, 120.0)
        z = depth_from_disparity(d, RIG)
        p_left = np.asarray(pixel_to_camera(u, v, z, RIG))
        ur, vr = right_pixel(u, v, d)
        p_right = np.asarray(pixel_to_camera(ur, vr, z, RIG))
        p_right[0] += RIG.baseline_m        # right camera sits at +B x
        assert np.linalg.norm(p_left - p_right) < 1e-9


def test_project_camera_inverts_pixel_to_camera():
    p = pixel_to_camera(123.25, 456.75, 0.81, RIG)
    u, v = project_camera(np.asarray(p), RIG)
    assert u == pytest.approx(123.25, abs=1e-10)
    assert v == pytest.approx(456.75, abs=1e-10)


@given(st.integers(0, 2 ** 31 - 1))
def test_world_transform_is_isometry(seed):
    rng = np.random.default_rng(seed)
    from scipy.spatial.transform import Rotation
    R = Rotation.random(random_state=np.random.RandomState(seed)).as_matrix()
    rig = StereoRig(f_px=500.0, baseline_m=0.05, u0=50, v0=50, width=100,
                    height=100, pixel_pitch_m=10e-6, R_cw=R,
                    t_cw=rng.normal(size=3))
    a = rng.normal(size=3)
    b = rng.normal(size=3)
    d_cam = np.linalg.norm(a - b)
    d_world = np.linalg.norm(camera_to_world(a, rig) - camera_to_world(b, rig))
    assert d_world == pytest.approx(d_cam, rel=1e-12)
