"""Shared fixtures: reference array geometries and small scenes."""

import numpy as np
import pytest

from nfisac.geometry import make_ula
from nfisac.scene import (Point2D, Rect, Scene, SensingTargetCluster,
                          Type1Object)

# The reproduction setup rounds c so the 2.4 GHz wavelength is exactly 0.125 m.
C_ROUND = 3.0e8


@pytest.fixture(scope="session")
def ula64():
    return make_ula(64, 2.4e9, speed_of_light=C_ROUND)


@pytest.fixture(scope="session")
def ula16():
    return make_ula(16, 2.4e9, speed_of_light=C_ROUND)


@pytest.fixture(scope="session")
def ula4():
    return make_ula(4, 2.4e9, speed_of_light=C_ROUND)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def three_scatterers():
    """Static-only scene with three well-separated point objects."""
    objs = (Type1Object(Point2D(3.0, 8.0), 1.0),
            Type1Object(Point2D(-4.0, 10.0), 1.0),
            Type1Object(Point2D(1.0, 13.0), 1.0))
    return Scene(type1=objs, type2=(), targets=(),
                 roi=Rect(-7.0, 7.0, 5.0, 25.0))


@pytest.fixture()
def cluster_scene():
    """One compact scatterer plus the reference dynamic cluster."""
    objs = (Type1Object(Point2D(3.0, 8.0), 1.0),)
    cluster = SensingTargetCluster(Point2D(-1.5, 5.0), 1.5, 5, 1.0)
    return Scene(type1=objs, type2=(), targets=(cluster,),
                 roi=Rect(-7.0, 7.0, 5.0, 25.0))
