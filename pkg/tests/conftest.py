import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from flowmend import build_incidence, get_fixture

settings.register_profile(
    "repro",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repro")


# The hand-checkable three-junction network: two boundary feeds into
# junction 1, one boundary drain out of junction 3, link 3 unmetered.
TOY_A = np.array([
    [1, 1, -1, -1, 0, 0],
    [0, 0, 1, 0, -1, 0],
    [0, 0, 0, 1, 1, -1],
], dtype=float)

# Kernel basis produced by the base set {2, 5, 6} (identity on those rows).
TOY_Z = np.array([
    [-1, 0, 1],
    [1, 0, 0],
    [0, 1, 0],
    [0, -1, 1],
    [0, 1, 0],
    [0, 0, 1],
], dtype=float)

TOY_TRUTH = np.array([300.0, 200.0, 300.0, 200.0, 300.0, 500.0])


@pytest.fixture(scope="session")
def toy():
    return get_fixture("toy")


@pytest.fixture(scope="session")
def parallel():
    return get_fixture("parallel-highway")


@pytest.fixture(scope="session")
def i405():
    return get_fixture("i405")


@pytest.fixture(scope="session")
def toy_incidence(toy):
    return build_incidence(toy.network)


@pytest.fixture(scope="session")
def parallel_incidence(parallel):
    return build_incidence(parallel.network)


@pytest.fixture(scope="session")
def i405_incidence(i405):
    return build_incidence(i405.network)
