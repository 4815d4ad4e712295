import numpy as np
import pytest

from wlanjam.waveform import OfdmConfig, make_sltf_grid


@pytest.fixture
def small_cfg():
    return OfdmConfig(num_subcarriers=64, cp_len=16, bandwidth=20e6, num_pulses=16, pri=1e-3)


@pytest.fixture
def full_cfg():
    return OfdmConfig()


@pytest.fixture
def small_grid(small_cfg):
    return make_sltf_grid(small_cfg, seed=3)


def rel_err(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(np.asarray(b))
