"""
Pytest configuration and shared fixtures for robust capacity tests.
"""

import json
import os
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from robust_capacity.channel import ChannelMatrix, bsc_matrix
from robust_capacity.config import SolverConfig, reset_config
from robust_capacity.generators.base import point_rng
from robust_capacity.generators.bsc import gen_bsc
from robust_capacity.generators.random_power4 import random_power4_model
from robust_capacity.uncertainty import PerturbationSet, SetKind, UncertaintyModel


@pytest.fixture(scope="session", autouse=True)
def setup_test_environment():
    """Set up test environment variables and paths"""
    project_root = Path(__file__).parent.parent
    os.environ['PYTHONPATH'] = str(project_root)
    yield


@pytest.fixture(autouse=True)
def clean_config():
    """Isolate tests from RCC_* variables and the global configuration"""
    cleared = {k: v for k, v in os.environ.items() if not k.startswith("RCC_")}
    with patch.dict('os.environ', cleared, clear=True):
        reset_config()
        yield
        reset_config()


@pytest.fixture
def rng():
    """Seeded generator for random test instances"""
    return np.random.default_rng(20240611)


@pytest.fixture
def fast_config():
    """Solver settings that keep unit-level solves short"""
    return SolverConfig(epsilon=1e-4, max_iters=3000, gap_check_every=10)


@pytest.fixture
def bsc_model():
    """BSC with crossover probability in [0.15, 0.45]"""
    return gen_bsc(0.15, 0.45)


@pytest.fixture
def random_channel(rng):
    """Strictly positive random 3 x 4 channel"""
    raw = rng.uniform(0.2, 1.0, size=(3, 4))
    return ChannelMatrix(raw / raw.sum(axis=1, keepdims=True))


@pytest.fixture
def small_power4_model():
    """Small instance of the fourth-power family on the box-cap-ball set"""
    return random_power4_model(6, 5, 2, 0.5, point_rng(7))


@pytest.fixture
def zero_uncertainty_model(random_channel):
    """Random channel with a single zero direction"""
    directions = np.zeros((1, 3, 4))
    return UncertaintyModel(random_channel, directions, PerturbationSet(SetKind.INF_BALL, 1))


@pytest.fixture
def weakly_symmetric_pair():
    """A weakly symmetric 2 x 3 channel and its row-swapped twin"""
    Q = ChannelMatrix([[1 / 3, 1 / 6, 1 / 2], [1 / 3, 1 / 2, 1 / 6]])
    swapped = ChannelMatrix(Q.entries[::-1].copy())
    return Q, swapped


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document into the test directory and return its path"""
    def _write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return path
    return _write


@pytest.fixture
def bsc_model_dict():
    """Model file content for the BSC interval [0.15, 0.45]"""
    return {
        "nominal": bsc_matrix(0.3).entries.tolist(),
        "directions": [[[-0.15, 0.15], [0.15, -0.15]]],
        "set": {"kind": "inf_ball", "gamma": 1.0},
    }
