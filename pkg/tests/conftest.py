import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wavestereo.oracle import SceneSpec, default_rig, render_stereo_pair

settings.register_profile(
    "suite", deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("suite")


def small_rig(width=160, height=128, **kw):
    """Central crop of the default rig: same optics, fewer pixels.

    A crop keeps every ray inside the default extent, so small scenes
    render without RayMiss.
    """
    return default_rig(width=width, height=height, **kw)


def textured(h, w, seed=0, lo=40.0, hi=210.0):
    """Deterministic random texture with strong local gradients."""
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(h, w)).astype(np.float32)


@pytest.fixture(scope="session")
def default_scene():
    return SceneSpec()


@pytest.fixture(scope="session")
def default_pair(default_scene):
    # one full-size render shared by matcher/metrics/acceptance tests
    return render_stereo_pair(default_scene, 0.0)


@pytest.fixture(scope="session")
def small_scene():
    return SceneSpec(rig=small_rig())


@pytest.fixture(scope="session")
def small_pair(small_scene):
    return render_stereo_pair(small_scene, 0.0)
