"""Synthetic thermal wave-scene oracle.

Renders rectified stereo pairs of a linear (Airy) long-crested wave field
with a band-limited advected thermal texture, and returns exact ground truth
(disparity, visibility, elevation) for metrology. Intensities follow the
thermal convention of 8-bit sensors: mid-gray background around 128.

Determinism: texture and sensor noise are hash-based functions of pixel and
lattice coordinates, so renders are bit-identical across runs and thread
counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import errors, _render
from .core import DisparityMap, Image, StereoRig

GRAVITY = 9.80665
MAX_STEEPNESS = 0.142      # limiting steepness H/lambda for deep-water waves
ETA_GRID_N = 128


def dispersion_k(omega, depth, gravity=GRAVITY):
    """Solve the finite-depth dispersion relation w^2 = g k tanh(k h) for k.

    Bisection to 1e-12 relative; f(k) is strictly increasing so the root is
    unique.
    """
    if omega <= 0 or depth <= 0 or gravity <= 0:
        raise errors.DispersionNoConvergence(
            "omega, depth and gravity must be positive")
    target = omega * omega

    def f(k):
        return gravity * k * math.tanh(k * depth) - target

    lo = target / gravity          # deep-water limit: f(lo) <= 0
    if f(lo) >= 0:
        return lo
    hi = lo * 2.0
    for _ in range(200):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:
        raise errors.DispersionNoConvergence("could not bracket the root")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
        if (hi - lo) <= 1e-12 * hi:
            break
    else:
        raise errors.DispersionNoConvergence("bisection did not converge")
    return 0.5 * (lo + hi)


def default_rig(height_above_water=0.6, tilt_deg=22.8, baseline_m=0.06,
                width=640, height=512, f_mm=12.0, pixel_pitch_um=17.0):
    """Stereo rig looking down at the water, pitched forward about camera x.

    Camera x maps to world X; the optical axis is tilted ``tilt_deg`` from
    nadir toward +Y. Matches a thermal camera pair on a lab flume gantry.
    """
    tau = math.radians(tilt_deg)
    ct, st = math.cos(tau), math.sin(tau)
    # columns = world coordinates of the camera axes (x right, y down, z fwd)
    R_cw = np.array([
        [1.0, 0.0, 0.0],
        [0.0, -ct, st],
        [0.0, -st, -ct],
    ])
    pitch_m = pixel_pitch_um * 1e-6
    return StereoRig(
        f_px=f_mm * 1e-3 / pitch_m,
        baseline_m=baseline_m,
        u0=(width - 1) / 2.0,
        v0=(height - 1) / 2.0,
        width=width,
        height=height,
        pixel_pitch_m=pitch_m,
        R_cw=R_cw,
        t_cw=np.array([0.0, 0.0, height_above_water]),
    )


@dataclass
class CylinderSpec:
    center_xy: tuple[float, float]
    radius: float


@dataclass
class SceneSpec:
    """Complete description of a synthetic wave scene."""

    wave_height: float = 0.0528          # crest-to-trough H (m)
    period: float = 0.632                # T (s)
    phase: float = 0.0
    water_depth: float = 0.9
    gravity: float = GRAVITY
    extent: tuple[tuple[float, float], tuple[float, float]] = \
        ((-0.45, 0.45), (-0.06, 0.70))   # simulated patch, world X then Y (m)
    texture_seed: int = 0
    texture_contrast: float = 40.0
    texture_scale_m: float = 0.02        # base correlation length (~20 px)
    noise_sigma: float = 0.5             # additive Gaussian, intensity units
    cylinder: CylinderSpec | None = None
    rig: StereoRig = field(default_factory=default_rig)
    frame_rate: float = 50.0
    flat: bool = False                   # H -> 0 limit: still-water scene

    def __post_init__(self):
        if self.period <= 0 or self.water_depth <= 0 or self.gravity <= 0:
            raise errors.SteepnessExceeded(
                "period, water depth and gravity must be positive")
        if self.frame_rate <= 0:
            raise errors.NonuniformSampling("frame_rate must be positive")
        (x0, x1), (y0, y1) = self.extent
        if not (x0 < x1 and y0 < y1):
            raise errors.ProbeOutsideExtent("extent bounds must be ordered")
        if not self.flat:
            if self.wave_height <= 0:
                raise errors.SteepnessExceeded("wave height must be positive")
            if self.wave_height / self.wavelength > MAX_STEEPNESS:
                raise errors.SteepnessExceeded(
                    f"H/lambda = {self.wave_height / self.wavelength:.4f} "
                    f"exceeds the limiting steepness {MAX_STEEPNESS}")

    @property
    def omega(self):
        return 2.0 * math.pi / self.period

    @property
    def k(self):
        return dispersion_k(self.omega, self.water_depth, self.gravity)

    @property
    def wavelength(self):
        return 2.0 * math.pi / self.k

    @property
    def phase_speed(self):
        return self.omega / self.k

    @property
    def amplitude(self):
        return 0.0 if self.flat else 0.5 * self.wave_height


@dataclass
class GroundTruth:
    """Exact per-frame truth emitted alongside a rendered pair."""

    disparity: DisparityMap
    visibility: np.ndarray        # bool grid: visible in the right view
    eta_grid: np.ndarray          # elevation samples over the extent (m)
    grid_x: np.ndarray
    grid_y: np.ndarray
    t: float


def surface_elevation(spec, x, y, t):
    """Analytic elevation eta(x, y, t); long-crested, so y is ignored."""
    x = np.asarray(x, dtype=np.float64)
    amp = spec.amplitude
    out = amp * np.cos(spec.k * x - spec.omega * t + spec.phase)
    return float(out) if out.ndim == 0 else np.broadcast_to(
        out, np.broadcast_shapes(out.shape, np.shape(y))).copy()


def _kernel_args(spec, t):
    rig = spec.rig
    R = rig.R_cw
    return dict(
        r00=R[0, 0], r01=R[0, 1], r02=R[0, 2],
        r10=R[1, 0], r11=R[1, 1], r12=R[1, 2],
        r20=R[2, 0], r21=R[2, 1], r22=R[2, 2],
        f_px=rig.f_px, u0=rig.u0, v0=rig.v0,
        height=rig.height, width=rig.width,
        amp=spec.amplitude, k=spec.k, om=spec.omega, ph=spec.phase, t=t,
    )


def render_stereo_pair(spec, t):
    """Render (left, right, ground_truth) for the scene at time t."""
    rig = spec.rig
    amp = spec.amplitude
    margin = 0.002 + 0.05 * amp
    if rig.t_cw[2] <= amp + margin:
        raise errors.RayMiss("camera is not above the maximum surface level")
    (x0, x1), (y0, y1) = spec.extent
    cyl = spec.cylinder
    has_cyl = cyl is not None
    ccx, ccy = cyl.center_xy if has_cyl else (0.0, 0.0)
    crad = cyl.radius if has_cyl else 0.0
    base = _kernel_args(spec, t)
    tbits = np.float64(t).view(np.uint64)

    H, W = rig.height, rig.width
    shape = (H, W)
    imgs = []
    s_hit_l = None
    kind_l = None
    right_axis = rig.R_cw[:, 0] * rig.baseline_m
    for cam_id in (0, 1):
        origin = rig.t_cw + (right_axis if cam_id else 0.0)
        img = np.empty(shape, dtype=np.float32)
        s_hit = np.empty(shape, dtype=np.float64)
        kind = np.empty(shape, dtype=np.uint8)
        misses = _render.render_view(
            origin[0], origin[1], origin[2], **base,
            cphase=spec.phase_speed,
            cell=spec.texture_scale_m, contrast=spec.texture_contrast,
            tex_seed=np.uint64(np.int64(spec.texture_seed)),
            noise_sigma=spec.noise_sigma, cam_id=cam_id, tbits=tbits,
            has_cyl=has_cyl, ccx=ccx, ccy=ccy, crad=crad,
            x_lo=x0, x_hi=x1, y_lo=y0, y_hi=y1,
            img=img, s_hit=s_hit, kind=kind)
        if misses:
            raise errors.RayMiss(
                f"{misses} rays left the extent without striking the surface")
        imgs.append(Image(img))
        if cam_id == 0:
            s_hit_l, kind_l = s_hit, kind

    disp = np.empty(shape, dtype=np.float32)
    visible = np.empty(shape, dtype=np.uint8)
    _render.ground_truth(
        rig.t_cw[0], rig.t_cw[1], rig.t_cw[2], **base,
        baseline=rig.baseline_m,
        has_cyl=has_cyl, ccx=ccx, ccy=ccy, crad=crad,
        s_hit=s_hit_l, kind=kind_l, disp=disp, visible=visible)
    vis = visible.astype(bool)

    gx = np.linspace(x0, x1, ETA_GRID_N)
    gy = np.linspace(y0, y1, ETA_GRID_N)
    eta_grid = surface_elevation(spec, gx[None, :], gy[:, None], t)
    gt = GroundTruth(
        disparity=DisparityMap(d=disp, mask=vis),
        visibility=vis, eta_grid=eta_grid, grid_x=gx, grid_y=gy, t=t)
    return imgs[0], imgs[1], gt


def probe_series(spec, probe_xy, t0=0.0, n_frames=500, probe_id="analytic"):
    """Analytic elevation series at a fixed (x, y), sampled at frame_rate."""
    from .core import WaveSeries
    (x0, x1), (y0, y1) = spec.extent
    px, py = probe_xy
    if not (x0 <= px <= x1 and y0 <= py <= y1):
        raise errors.ProbeOutsideExtent(
            f"probe {probe_xy} outside extent {spec.extent}")
    dt = 1.0 / spec.frame_rate
    t = t0 + dt * np.arange(n_frames)
    eta = spec.amplitude * np.cos(
        spec.k * px - spec.omega * t + spec.phase)
    return WaveSeries(t0=t0, dt=dt, eta=eta, probe_id=probe_id,
                      probe_xy=(px, py))


def disparity_range(spec, pad=3):
    """Conservative integer disparity search range for matching this scene.

    Evaluates depth at the extent corners with the surface at +/- amplitude
    and converts via d = B f / z.
    """
    rig = spec.rig
    axis = rig.R_cw[:, 2]       # optical axis in world coordinates
    (x0, x1), (y0, y1) = spec.extent
    amp = spec.amplitude
    zs = []
    for x in (x0, x1):
        for y in (y0, y1):
            for e in (-amp, amp):
                p = np.array([x, y, e]) - rig.t_cw
                zs.append(float(axis @ p))
    z_min, z_max = min(zs), max(zs)
    if z_min <= 0:
        raise errors.NonpositiveDepth("extent reaches behind the camera")
    d_lo = rig.baseline_m * rig.f_px / z_max
    d_hi = rig.baseline_m * rig.f_px / z_min
    return max(1, int(math.floor(d_lo)) - pad), int(math.ceil(d_hi)) + pad


# ------------------------------------------------------- JSON round trip

def spec_to_dict(spec):
    from .formats import rig_to_dict
    d = {
        "wave_height": spec.wave_height,
        "period": spec.period,
        "phase": spec.phase,
        "water_depth": spec.water_depth,
        "gravity": spec.gravity,
        "extent": [list(spec.extent[0]), list(spec.extent[1])],
        "texture_seed": spec.texture_seed,
        "texture_contrast": spec.texture_contrast,
        "texture_scale_m": spec.texture_scale_m,
        "noise_sigma": spec.noise_sigma,
        "cylinder": None if spec.cylinder is None else
            {"center_xy": list(spec.cylinder.center_xy),
             "radius": spec.cylinder.radius},
        "rig": rig_to_dict(spec.rig),
        "frame_rate": spec.frame_rate,
        "flat": spec.flat,
    }
    return d


def spec_from_dict(d):
    from .formats import rig_from_dict
    d = dict(d)
    cyl = d.get("cylinder")
    kwargs = {}
    for key in ("wave_height", "period", "phase", "water_depth", "gravity",
                "texture_seed", "texture_contrast", "texture_scale_m",
                "noise_sigma", "frame_rate", "flat"):
        if key in d:
            kwargs[key] = d[key]
    if "extent" in d:
        (x0, x1), (y0, y1) = d["extent"]
        kwargs["extent"] = ((float(x0), float(x1)), (float(y0), float(y1)))
    if cyl is not None:
        kwargs["cylinder"] = CylinderSpec(
            center_xy=tuple(cyl["center_xy"]), radius=float(cyl["radius"]))
    if "rig" in d:
        kwargs["rig"] = rig_from_dict(d["rig"])
    return SceneSpec(**kwargs)
