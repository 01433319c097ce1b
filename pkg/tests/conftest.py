import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from jspec.linalg_core import SpectrumPointSet, make_rng

settings.register_profile(
    "jspec", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("jspec")


@pytest.fixture
def rng():
    return make_rng(20240601)


def point_set(rows, n):
    return SpectrumPointSet.from_points(np.array(rows, dtype=complex).reshape(-1, n), n=n)


def same_points(a, b, tol=1e-8):
    return len(a) == len(b) and a.hausdorff(b) <= tol
