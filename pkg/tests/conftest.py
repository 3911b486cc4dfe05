import numpy as np
import pytest

from anisonl.profile import derive_constants, isotropic
from anisonl.quadrature import QuadratureScheme


@pytest.fixture(scope="session")
def iso1():
    """n=1, sigma=1, lambda=Lambda=1: c_sigma = 1/2."""
    return isotropic(1, 1.0)


@pytest.fixture(scope="session")
def iso1_ell():
    return isotropic(1, 1.0, 1.0, 2.0)


@pytest.fixture(scope="session")
def iso2():
    return isotropic(2, 1.0, 1.0, 2.0)


@pytest.fixture(scope="session")
def aniso2():
    return derive_constants(2, (1.0, 1.5), 1.0, 2.0)


@pytest.fixture(scope="session")
def quad_fast():
    return QuadratureScheme(shells=16, nodes_per_shell=800, far_radius=16.0,
                            r_inner=1e-8, seed=42)


@pytest.fixture(scope="session")
def quad_tight():
    return QuadratureScheme(shells=28, nodes_per_shell=4000, far_radius=64.0,
                            r_inner=1e-9, seed=42)


def random_profile(rng, n=None):
    n = n or int(rng.integers(1, 4))
    sigma = tuple(rng.uniform(0.1, 1.99, size=n))
    lam = rng.uniform(0.5, 2.0)
    return derive_constants(n, sigma, lam, lam * rng.uniform(1.0, 3.0))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
