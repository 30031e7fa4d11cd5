import numpy as np
import pytest

from bftt3d import EncoderConfig, generate_shape

# Small config used throughout: fast but structurally identical to defaults.
SMALL_CFG = EncoderConfig(d0=24, k_neighbors=8)


@pytest.fixture(scope="session")
def small_cfg():
    return SMALL_CFG


@pytest.fixture(scope="session")
def sphere_cloud():
    return generate_shape("sphere", 256, seed=11)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
