import numpy as np
import pytest
from hypothesis import settings

from lorentz_holes.billiard_core import BoundaryMode, Disk, ScattererLattice, default_lattice

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def fixture_lattice():
    return default_lattice()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def strip_lattice(*disks, bound=5.0):
    """Reflecting-strip lattice with a hand-set free-path bound, for geometry examples."""
    return ScattererLattice(tuple(Disk(c, r) for c, r in disks), BoundaryMode.REFLECTING_STRIP, bound)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
