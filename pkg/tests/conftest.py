import numpy as np
import pytest

from aifpointing.config import RunConfig


@pytest.fixture()
def fast_config() -> RunConfig:
    """Small planner/VI budgets for unit tests that run whole trials."""
    return RunConfig(
        n_plans=24,
        horizon=4,
        vi_steps=8,
        vi_samples=64,
        pv_state_samples=16,
        pv_obs_samples=2,
        noise_position_std=0.004,
        noise_displacement_std=0.004,
        reps=1,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
