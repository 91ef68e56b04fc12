import numpy as np
import pytest

from eigexpand.funcgrid import fourier_basis, make_grid
from eigexpand.simulate import EigenProfile, ProcessSpec, ScoreModel


@pytest.fixture
def grid16():
    return make_grid(16)


@pytest.fixture
def basis16(grid16):
    return fourier_basis(grid16, 4)


def poly_spec(T=64, J=16, r=2.0, scores=None):
    grid = make_grid(T)
    return ProcessSpec("kl", fourier_basis(grid, J), EigenProfile("polynomial", r, J),
                       scores or ScoreModel())


@pytest.fixture
def rng():
    return np.random.default_rng(20241014)
