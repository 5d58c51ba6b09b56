import sys
from pathlib import Path

import numpy as np
import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))

from h2map.geodata import RasterGrid  # noqa: E402


@pytest.fixture
def equator_grid():
    """20x20 grid straddling the equator at 0.01 degree resolution."""
    return RasterGrid(
        n_cols=20, n_rows=20, origin_lon=0.0, origin_lat=-0.1,
        cell_size=0.01, nodata=-9999.0, cells=np.zeros(400),
    )


def make_grid(n_rows, n_cols, origin_lat=0.0, origin_lon=0.0, cell_size=0.01,
              cells=None, nodata=-9999.0):
    if cells is None:
        cells = np.zeros(n_rows * n_cols)
    return RasterGrid(
        n_cols=n_cols, n_rows=n_rows, origin_lon=origin_lon, origin_lat=origin_lat,
        cell_size=cell_size, nodata=nodata, cells=cells,
    )
