import numpy as np
import pytest

from relbgk import phase_space as ps


@pytest.fixture(scope="session")
def small_grid():
    """20^3 Gauss-Legendre box, adequate for beta >= 1.5 at loose tolerance."""
    return ps.build_grid("gauss-legendre-tensor", 8.0, 20, force=True)


@pytest.fixture(scope="session")
def fine_grid():
    """128^3 Gauss-Legendre box; resolves beta >= 1.5 moments to ~1e-7."""
    return ps.build_grid("gauss-legendre-tensor", 14.0, 128, force=True)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
