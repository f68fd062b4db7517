from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "chainlogic", max_examples=50, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("chainlogic")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260815)
