import csv
import io

import numpy as np
import pytest

from leocbf.geometry import SphereGeometry, density_for_mean_count, to_ring
from leocbf.interference import RadioConfig
from leocbf.special import FadingParams

# the two fading sets used throughout: light shadowing and strong line of sight
RAYLEIGH_LIKE = FadingParams(1, 0.063, 8.97e-4)
STRONG_LOS = FadingParams(10, 0.126, 0.835)

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def geom():
    return SphereGeometry.from_altitude(500.0)


@pytest.fixture(scope="session")
def ring_for(geom):
    def make(mean_count):
        return to_ring(geom, density_for_mean_count(geom, mean_count))
    return make


@pytest.fixture(scope="session")
def ring5(ring_for):
    return ring_for(5.0)


@pytest.fixture(scope="session")
def radio():
    return RadioConfig()


@pytest.fixture(params=[RAYLEIGH_LIKE, STRONG_LOS], ids=["m1", "m10"])
def fading(request):
    return request.param


def read_csv(text):
    """Rows of a leocbf CSV (``#`` lines skipped) as a list of dicts."""
    body = "\n".join(l for l in text.splitlines() if not l.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
