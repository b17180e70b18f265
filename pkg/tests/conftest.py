import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fugseg import _kernels
from fugseg.geometry import SensorModel, sensor_preset
from fugseg.labeling import LabelThresholds
from fugseg.polar_grid import GridConfig, build_grid, radial_boundaries

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = os.path.join(os.path.dirname(__file__), "data")

# 12 segments of 30 deg, 8 cells of 1 m: hand-traceable fixtures
SMALL_GRID = GridConfig(delta_alpha=math.radians(30.0), num_cells_m=8, r0=0.5, r_max=8.5)
HDL64E = sensor_preset("hdl64e")
TRADITIONAL = LabelThresholds(t_delta_slope=0.1, t_delta_r=10.0, slope_mode="traditional")


def cell_center(config, i, j):
    b = radial_boundaries(config)
    r = 0.5 * (b[j] + b[j + 1])
    a = math.pi - (i + 0.5) * config.delta_alpha
    return r * math.cos(a), r * math.sin(a)


def grid_from_z(z, config=SMALL_GRID):
    """Grid with one point at the center of each cell; NaN in ``z`` = empty."""
    z = np.asarray(z, dtype=float)
    pts = []
    for i in range(z.shape[0]):
        for j in range(z.shape[1]):
            if not np.isnan(z[i, j]):
                x, y = cell_center(config, i, j)
                pts.append((x, y, z[i, j]))
    grid, _ = build_grid(np.array(pts), config)
    return grid


@pytest.fixture(params=sorted(_kernels.available_backends()))
def backend(request):
    """Run a test once per importable kernel backend."""
    previous = _kernels.BACKEND_NAME
    _kernels.use_backend(request.param)
    yield request.param
    _kernels.use_backend(previous)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
