import numpy as np
import pytest

from stfe2d.grid import Field, Grid
from stfe2d.material import Material


@pytest.fixture
def grid44():
    return Grid(4, 4, 1.0, 1.0)


@pytest.fixture
def grid65():
    return Grid(6, 5, 1.0, 0.8)


@pytest.fixture
def mat():
    return Material()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def positive_field(rng, grid, lo=0.6, hi=1.8):
    return Field(grid, rng.uniform(lo, hi, (grid.ny, grid.nx)))


def interpolant_evaluator(field):
    """Callable evaluating the bilinear interpolant of a nodal field."""
    g = field.grid
    v = field.values

    def f(x, y):
        xs = np.asarray(x) / g.hx
        ys = np.asarray(y) / g.hy
        i0 = np.floor(xs).astype(int) % g.nx
        j0 = np.floor(ys).astype(int) % g.ny
        a = xs - np.floor(xs)
        b = ys - np.floor(ys)
        i1 = (i0 + 1) % g.nx
        j1 = (j0 + 1) % g.ny
        return (v[j0, i0] * (1 - a) * (1 - b) + v[j0, i1] * a * (1 - b)
                + v[j1, i0] * (1 - a) * b + v[j1, i1] * a * b)

    return f
