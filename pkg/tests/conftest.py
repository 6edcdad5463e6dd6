import numpy as np
import pytest

from pencil_lab import fixtures


@pytest.fixture
def ex1():
    return fixtures.ex1_pencil()


@pytest.fixture
def ex1_boundary():
    return fixtures.ex1_boundary()


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
