import numpy as np
import pytest

from levelflow import RotatingPair, child_rng, sample_goe


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def goe_pair(n: int, seed: int, alpha: float = 0.5) -> RotatingPair:
    """Seeded random rotation pair used across the dynamics tests."""
    stream = child_rng(seed, 0)
    return RotatingPair(sample_goe(n, alpha, stream), sample_goe(n, alpha, stream))
