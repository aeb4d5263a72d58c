import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from predmod.matfun import NumericalAmbiguityWarning

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _quiet_ambiguity():
    # random instances occasionally land in a rank ambiguity band; that is reported, not an error
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NumericalAmbiguityWarning)
        yield


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)
