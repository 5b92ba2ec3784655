import pytest

from comprat.hpnum import PrecisionCtx


@pytest.fixture
def ctx():
    return PrecisionCtx(256)


@pytest.fixture
def ctx512():
    return PrecisionCtx(512)


def close(a, b, tol):
    """Relative-or-absolute closeness for mpf values."""
    return abs(a - b) <= tol * max(1, abs(b))
