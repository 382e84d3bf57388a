from typing import Callable, List

import numpy as np
import pytest

from src.models.lightfield import AperturePattern, LightField
from src.models.schemas import SensorConfig


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def quiet_sensor() -> SensorConfig:
    return SensorConfig(noiseless=True)


@pytest.fixture
def noisy_sensor() -> SensorConfig:
    return SensorConfig(seed=7)


@pytest.fixture
def make_lightfield(rng) -> Callable[..., LightField]:
    def _make(height: int = 12, width: int = 12, low: float = 0.0, high: float = 1.0) -> LightField:
        return LightField(values=rng.uniform(low, high, size=(height, width, 8, 8)))

    return _make


@pytest.fixture
def make_patterns(rng) -> Callable[..., List[AperturePattern]]:
    """N random patterns; binary ones keep at least one open view, black_first puts the black code at position 1."""

    def _make(n: int = 4, black_first: bool = True, binary: bool = True) -> List[AperturePattern]:
        patterns = []
        for k in range(n):
            if black_first and k == 0:
                patterns.append(AperturePattern.black())
                continue
            if binary:
                grid = (rng.uniform(size=(8, 8)) < 0.5).astype(np.float64)
                grid[rng.integers(8), rng.integers(8)] = 1.0
                patterns.append(AperturePattern(values=grid, binary=True))
            else:
                patterns.append(AperturePattern(values=rng.uniform(0.05, 0.95, size=(8, 8))))
        return patterns

    return _make
