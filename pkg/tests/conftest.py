import pytest

from slitwave import BeamParams, CoherenceParams, DetectorScan, SlitGeometry, Truncation

# Published neutron run parameters.
MASS = 1.67e-27
ENERGY = 3.3e-23
L = 5.0
THICKNESS = 3.0e-5


@pytest.fixture
def beam():
    return BeamParams(MASS, ENERGY, amplitude=1.0)


@pytest.fixture
def single_geometry():
    return SlitGeometry(a1=90e-6, c=THICKNESS)


@pytest.fixture
def double_geometry():
    return SlitGeometry(a1=21.9e-6, a2=22.5e-6, d=100e-6, c=THICKNESS)


@pytest.fixture
def scan():
    return DetectorScan(l=L)


@pytest.fixture
def coarse_scan():
    return DetectorScan(l=L, samples=201)


@pytest.fixture
def coherence():
    return CoherenceParams(0.397, 0.918)


@pytest.fixture
def trunc():
    return Truncation(600, 10)


@pytest.fixture
def small_trunc():
    return Truncation(60, 4)
