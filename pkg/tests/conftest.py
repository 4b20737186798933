import numpy as np
import pytest

from csslab.grid import RadialField, RadialGrid


@pytest.fixture(scope="session")
def fine_grid():
    return RadialGrid(4096, 16.0)


@pytest.fixture(scope="session")
def gaussian(fine_grid):
    return RadialField(fine_grid, np.exp(-fine_grid.nodes ** 2 / 2))


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("CSSLAB_CACHE", str(tmp_path_factory.getbasetemp() / "dcache"))
