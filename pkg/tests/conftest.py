import math

import pytest

from qps import (
    EARTH_RADIUS_M,
    LeoConfig,
    Point3,
    TerrestrialConfig,
    build_leo,
    build_terrestrial,
)


@pytest.fixture(scope="session")
def ground():
    """Axis-aligned ground constellation with half length 2 m."""
    return build_terrestrial(TerrestrialConfig(2.0))


@pytest.fixture(scope="session")
def leo():
    """Satellite constellation: 7360 km distance, 20 km baselines."""
    return build_leo(LeoConfig(7.36e6, 2.0e4))


@pytest.fixture(scope="session")
def ground_user():
    """Reference user 100 m from the ground layout along (1,1,1)."""
    r = 100.0 / math.sqrt(3.0)
    return Point3(r, r, r)


@pytest.fixture(scope="session")
def leo_user():
    """Reference user on the Earth's surface along (1,1,1)."""
    r = EARTH_RADIUS_M / math.sqrt(3.0)
    return Point3(r, r, r)
