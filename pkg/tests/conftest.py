import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


small_ints = st.integers(min_value=-4, max_value=4)


def int_arrays(shape):
    return hnp.arrays(np.int64, shape, elements=small_ints)


def float_arrays(shape):
    # a grid of hundredths keeps products away from underflow
    return hnp.arrays(np.float64, shape, elements=st.integers(-1000, 1000).map(lambda v: v / 100))


@st.composite
def invertible_int_matrices(draw, n=2):
    M = draw(int_arrays((n, n)))
    from borderrank import _exact

    if _exact.det(M) == 0:
        M = M + 5 * np.eye(n, dtype=np.int64)
        if _exact.det(M) == 0:
            M = np.eye(n, dtype=np.int64)
    return M


def random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))
