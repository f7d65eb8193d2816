import pytest

from fedosov.engine import abelian_connection
from fedosov.geometry import preset_constant_curvature, preset_flat


@pytest.fixture(scope="session")
def flat_geom():
    return preset_flat(2, 4)


@pytest.fixture(scope="session")
def curved_geom():
    return preset_constant_curvature(2, 4)


@pytest.fixture(scope="session")
def flat_conn(flat_geom):
    return abelian_connection(flat_geom, order=4)


@pytest.fixture(scope="session")
def curved_conn(curved_geom):
    return abelian_connection(curved_geom, order=4)
