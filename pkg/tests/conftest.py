import os

import numpy as np
import pytest
from hypothesis import settings

from polyframe.builders import random_polymer, random_unit_topology
from polyframe.io import read_polymer_spec

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

DATA = os.path.join(os.path.dirname(__file__), "data")

# Filled by tests/test_acceptance.py; printed once at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def pe_spec():
    return read_polymer_spec(os.path.join(DATA, "polyethylene.spec"))


@pytest.fixture
def ring_spec():
    return read_polymer_spec(os.path.join(DATA, "styrene_like.spec"))


@pytest.fixture
def small_polymer():
    """(graph, conf, std_units, rotations) for a 6-unit, 9-atom-unit chain."""
    return random_polymer(np.random.default_rng(7), 6, 9)


@pytest.fixture
def unit_topo():
    return random_unit_topology(10, np.random.default_rng(3))
