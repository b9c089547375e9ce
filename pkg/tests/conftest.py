import numpy as np
import pytest

from porofrac.geometry import build_rect_mesh_with_fracture
from porofrac.materials import MaterialParams, WidthProfile

UNIT_DOMAIN = (0.0, 0.0, 1.0, 1.0)
FRACTURE = ((0.25, 0.5), (0.75, 0.5))


@pytest.fixture(scope="session")
def coarse_mesh():
    return build_rect_mesh_with_fracture(UNIT_DOMAIN, FRACTURE, 0.25)


@pytest.fixture(scope="session")
def medium_mesh():
    return build_rect_mesh_with_fracture(UNIT_DOMAIN, FRACTURE, 0.125)


@pytest.fixture()
def unit_params():
    return MaterialParams(
        shear_modulus=1.0,
        lame_lambda=2.0,
        biot_alpha=1.0,
        inv_biot_modulus=1.0,
        fluid_compressibility=0.5,
        porosity=0.5,
        viscosity=1.0,
        permeability=np.eye(2),
        fluid_density=1.0,
        gravity=0.0,
        fracture_storage=1.0,
    )


@pytest.fixture()
def default_width():
    return WidthProfile(length=0.5, w0=1e-3)


def make_width(length=0.5, w0=1e-3, **kw):
    return WidthProfile(length=length, w0=w0, **kw)
