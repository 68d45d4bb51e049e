import numpy as np
import pytest

from chemolab.field import Grid, ScalarField


@pytest.fixture
def line_grid():
    return Grid.line(10.0, 64)


@pytest.fixture
def rect_grid():
    return Grid.rectangle((4.0, 3.0), (16, 12))


def cosine_field(grid: Grid, base: float, amplitude: float, mode: int = 1) -> ScalarField:
    x = grid.centers(0)
    wave = np.cos(mode * np.pi * x / grid.extents[0])
    if grid.dim == 2:
        wave = np.broadcast_to(wave[:, None], grid.cells).copy()
    return ScalarField(grid, base + amplitude * wave)
