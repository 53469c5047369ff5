import numpy as np
import pytest


def assert_multiset_close(actual, expected, tol=1e-8):
    """Match two complex multisets greedily within tol (order-free)."""
    actual = list(np.asarray(actual, dtype=complex))
    expected = list(np.asarray(expected, dtype=complex))
    assert len(actual) == len(expected)
    for target in expected:
        gaps = [abs(a - target) for a in actual]
        best = int(np.argmin(gaps))
        assert gaps[best] <= tol, f"no match for {target}: nearest gap {gaps[best]}"
        actual.pop(best)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
