import numpy as np
import pytest

from loopgrad import lie_core, loop_algebra


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture(scope="session")
def sl2():
    return lie_core.build_algebra("A1")


@pytest.fixture(scope="session")
def sl3():
    return lie_core.build_algebra("A2")


@pytest.fixture(scope="session")
def untwisted_sl2(sl2):
    return loop_algebra.untwisted(sl2)


@pytest.fixture(scope="session")
def twisted_sl2(sl2):
    """sl2 twisted by Ad(diag(1,-1)) at K = 2."""
    aut = lie_core.inner_automorphism(sl2, np.diag([1.0, -1.0]))
    return loop_algebra.TwistData(sl2, aut, 2)


def mode_distance(x, y):
    """Largest mode-coefficient deviation between two loop elements."""
    keys = set(x.modes) | set(y.modes)
    if not keys:
        return 0.0
    return max(float(np.abs(x.mode(k) - y.mode(k)).max()) for k in keys)
