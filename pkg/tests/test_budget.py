"""First-order triangulation error budget checks.

The finite-difference test re-derives the depth error numerically from the
triangulation map itself, with no linearization.
"""

import csv
import math

import numpy as np
import pytest

from wavestereo import errors
from wavestereo.budget import (
    budget_table,
    depth_error,
    disparity_sigma,
    quantization_errors,
    world_errors,
    write_budget_csv,
)
from wavestereo.geometry import depth_from_disparity, disparity_from_depth
from wavestereo.oracle import default_rig

from conftest import small_rig

RIG = default_rig()


def test_disparity_sigma_is_half_quantum():
    assert disparity_sigma() == 1.0 / math.sqrt(2.0)
    assert disparity_sigma(0.5) == 0.5 / math.sqrt(2.0)


def test_depth_error_reference_point():
    # 0.6 m on the default rig: just over six millimetres
    mm = float(depth_error(0.6, RIG)) * 1000.0
    assert abs(mm - 6.011) <= 0.001


def test_depth_error_quadratic_in_z():
    for z in (0.3, 0.5, 0.62):
        assert float(depth_error(2 * z, RIG)) == pytest.approx(
            4 * float(depth_error(z, RIG)), rel=1e-12)


def test_depth_error_matches_finite_difference():
    # propagate the actual triangulation map through a disparity step of
    # e/sqrt(2) pixels and compare with the linearized budget
    dd = disparity_sigma()
    for z in np.linspace(0.5, 1.0, 11):
        d = float(disparity_from_depth(float(z), RIG))
        fd = abs(float(depth_from_disparity(d - dd, RIG)) - z)
        lin = float(depth_error(float(z), RIG))
        assert abs(fd - lin) / lin < 0.05


def test_depth_error_rejects_bad_depth():
    with pytest.raises(errors.NonpositiveDepth):
        depth_error(0.0, RIG)
    with pytest.raises(errors.NonpositiveDepth):
        depth_error(np.array([0.5, -0.1]), RIG)


def test_lateral_error_at_principal_point():
    e_x, e_y, e_z = quantization_errors(0.6, RIG)
    assert float(e_x) == 0.6 / RIG.f_px
    assert float(e_y) == 0.6 / RIG.f_px
    assert float(e_z) == float(depth_error(0.6, RIG))


def test_lateral_error_grows_off_axis():
    e_x0, _, _ = quantization_errors(0.6, RIG)
    e_x, e_y, _ = quantization_errors(0.6, RIG, u=RIG.u0 + 100.0, v=RIG.v0)
    xp = 100.0 * RIG.pixel_pitch_m
    expect = (0.6 / RIG.f_px) * math.sqrt(
        1.0 + (xp / (math.sqrt(2.0) * RIG.baseline_m)) ** 2)
    assert float(e_x) == expect
    assert float(e_x) > float(e_x0)
    assert float(e_y) == float(e_x0)      # v stays on axis


def test_quantization_errors_scale_linearly_with_e():
    one = quantization_errors(0.7, RIG, e=1.0)
    two = quantization_errors(0.7, RIG, e=2.0)
    for a, b in zip(one, two):
        assert float(b) == pytest.approx(2 * float(a), rel=1e-12)
    with pytest.raises(errors.InputError):
        quantization_errors(0.7, RIG, e=0.0)
    with pytest.raises(errors.InputError):
        quantization_errors(0.7, RIG, e=-1.0)


def test_world_errors_identity_rig():
    rig = small_rig(tilt_deg=0.0)
    assert np.allclose(rig.R_cw, np.diag([1.0, -1.0, -1.0]), atol=1e-15)
    xw, yw, zw = world_errors(0.001, 0.002, 0.003, rig)
    assert (float(xw), float(yw), float(zw)) == (0.001, 0.002, 0.003)


def test_world_errors_tilted_axis():
    xw, yw, zw = world_errors(0.0, 0.0, 1.0, RIG)
    assert float(xw) == pytest.approx(0.0, abs=1e-15)
    assert float(yw) == pytest.approx(0.38752, abs=5e-6)
    assert float(zw) == pytest.approx(0.92186, abs=5e-6)


def test_world_errors_preserve_norm():
    e = (0.0005, 0.0007, 0.006)
    w = world_errors(*e, RIG)
    assert math.hypot(*(float(x) for x in w)) == pytest.approx(
        math.hypot(*e), rel=1e-12)


def test_budget_table_contents():
    rows = budget_table(RIG, 0.55, 0.75, n_samples=5)
    assert [r.z for r in rows] == pytest.approx(
        list(np.linspace(0.55, 0.75, 5)), abs=0)
    mm = [r.e_z * 1000 for r in rows]
    assert mm == sorted(mm)
    assert mm[0] == pytest.approx(5.050412, abs=5e-4)
    assert mm[-1] == pytest.approx(9.391262, abs=5e-4)
    for r in rows:
        norm = math.sqrt(r.e_x ** 2 + r.e_y ** 2 + r.e_z ** 2)
        assert r.e_zw <= norm + 1e-15
        assert r.e == 1.0
        d = r.to_dict()
        assert d["z"] == r.z and d["e_zw"] == r.e_zw


def test_budget_table_default_sampling():
    rows = budget_table(RIG, 0.5, 1.0)
    assert len(rows) == 21


@pytest.mark.parametrize("zmin,zmax,n", [
    (0.0, 1.0, 5), (-0.2, 1.0, 5), (1.0, 0.5, 5), (0.7, 0.7, 5),
    (0.5, 1.0, 1),
])
def test_budget_table_bad_range(zmin, zmax, n):
    with pytest.raises(errors.BadRange):
        budget_table(RIG, zmin, zmax, n_samples=n)


def test_budget_csv_round_trip(tmp_path):
    rows = budget_table(RIG, 0.5, 0.9, n_samples=7)
    path = tmp_path / "budget.csv"
    write_budget_csv(path, rows)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        assert header == ["z", "e_x", "e_y", "e_z", "e_xw", "e_yw", "e_zw"]
        back = [[float(x) for x in line] for line in reader]
    assert len(back) == 7
    for r, line in zip(rows, back):
        # %.17g round-trips doubles exactly
        assert line == [r.z, r.e_x, r.e_y, r.e_z, r.e_xw, r.e_yw, r.e_zw]
