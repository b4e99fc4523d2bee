import numpy as np
import pytest

from havs import PointCloud
from havs.io import SceneConfig, generate_scene


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_cloud(seed, n, low=-10.0, high=10.0):
    gen = np.random.default_rng(seed)
    return PointCloud(points=gen.uniform(low, high, (n, 3)))


def lidar_scene(seed, n_background=15000, **kwargs):
    cfg = SceneConfig(seed=seed, n_background=n_background, **kwargs)
    return generate_scene(cfg)


@pytest.fixture
def small_cloud():
    return random_cloud(7, 200)
