import os
import sys

import pytest

from sonosim.geometry import BeamGeometry
from sonosim import phantom

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def small_geometry():
    return BeamGeometry(scanline_count=64, axial_samples=256)


@pytest.fixture
def tiny_geometry():
    return BeamGeometry(scanline_count=32, axial_samples=128)


@pytest.fixture
def uniform_map(small_geometry):
    """Background-only tissue map."""
    return phantom.generate_phantom(phantom.PhantomSpec(), small_geometry)
