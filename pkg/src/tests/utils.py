import os
from pathlib import Path
from typing import List

import numpy as np
import pytest
from pytest_multilog import TestHelper

from ldagan.config.cfg_manager import ENV_PREFIX
from ldagan.config.train_config import TrainConfig
from ldagan.data import RING_MODES, RING_RADIUS, RING_VARIANCE, Dataset2D, ring_spec, sample_mixture, save_dataset
from ldagan.special_math import RngStream


class TestUtils(TestHelper):
    @property
    def out_path(self) -> Path:
        return self.test_folder / "out"

    @property
    def data_path(self) -> Path:
        return self.test_folder / "data.csv"

    @pytest.fixture
    def clean_env(self):
        # Don't let environment leak from one test to another
        yield
        for name in [n for n in os.environ if n.startswith(ENV_PREFIX)]:
            del os.environ[name]

    def small_config(self, **kwargs) -> TrainConfig:
        # Tiny networks, for fast training tests
        args = {
            "K": 3,
            "noise_dim": 4,
            "head_width": 8,
            "disc_hidden": [8],
            "real_batch": 16,
            "per_gen": 4,
            "noise_batch": 8,
            "total_iterations": 6,
            "eval_interval": 2,
            "eval_samples": 64,
            "lr_d": 1e-3,
            "lr_g": 1e-3,
        }
        args.update(kwargs)
        return TrainConfig(**args)

    def small_config_items(self) -> List[str]:
        # Same as above, as CLI overrides
        return ["-c", "noise_dim=4", "-c", "head_width=8", "-c", "disc_hidden=8", "-c", "real_batch=16", "-c", "per_gen=4", "-c", "noise_batch=8"]

    def ring_dataset(self, n: int = 512, seed: int = 0) -> Dataset2D:
        return sample_mixture(ring_spec(RING_MODES, RING_RADIUS, RING_VARIANCE), n, RngStream(seed))

    def write_ring_dataset(self, n: int = 512, seed: int = 0) -> Path:
        save_dataset(self.data_path, self.ring_dataset(n, seed))
        return self.data_path

    def assert_same_arrays(self, a: List[np.ndarray], b: List[np.ndarray]):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)
