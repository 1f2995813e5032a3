import numpy as np
import pytest

from dual_transform import DualTransform, IdentityTransform
from energy import EnergyModel
from model import Nonlinearity, Potential
from radial_mesh import RadialField, build_grid


def bump(grid, width=3.0, amplitude=1.0, wobble=0.0):
    r = grid.nodes
    return RadialField(grid, amplitude * np.exp(-(r / width) ** 2) * (1.0 + wobble * np.cos(np.pi * r / grid.R)))


@pytest.fixture
def small_grid():
    return build_grid(3, 10.0, 400)


@pytest.fixture
def builtin_model(small_grid):
    return EnergyModel(DualTransform(), Nonlinearity.builtin(1.0), Potential.constant(1.0), small_grid)


@pytest.fixture
def semilinear_model(small_grid):
    return EnergyModel(IdentityTransform(), Nonlinearity.semilinear(), Potential.constant(1.0), small_grid)


@pytest.fixture
def vanishing_model():
    grid = build_grid(3, 4.0, 1600)
    return EnergyModel(DualTransform(), Nonlinearity.builtin(400.0), Potential.remark13(), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_bump():
    return bump
