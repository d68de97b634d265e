import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from mifisher.matcore import BipartiteDims
from mifisher.states import random_generator_family

settings.register_profile(
    "default",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**31 - 1)
thetas = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def qubits():
    return BipartiteDims(2, 2)


def random_two_qubit_family(seed: int, rank=None):
    return random_generator_family(BipartiteDims(2, 2), np.random.default_rng(seed), rank=rank)
