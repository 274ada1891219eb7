import numpy as np
import pytest

from heisenberg_mfa import synthesis


@pytest.fixture(scope="session")
def F():
    """Besov-saturating field with s = 2, p = q = 2."""
    return synthesis.besov_saturating_field(synthesis.BesovParams(2, 2, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
