import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fugseg.errors import ConfigError
from fugseg.geometry import Point3
from fugseg.polar_grid import (
    CellLabel,
    GridConfig,
    build_grid,
    cell_index,
    manual_14_boundaries,
    node_positions,
    radial_boundaries,
    radial_bounds,
)

from oracles import naive_assign, naive_assign_broadcast

DEFAULT_GRID = GridConfig()


class TestGridConfig:
    def test_defaults(self):
        assert DEFAULT_GRID.num_segments_l == 120
        assert DEFAULT_GRID.num_cells_m == 80
        assert DEFAULT_GRID.shape == (120, 80)

    def test_non_dividing_alpha_rejected(self):
        with pytest.raises(ConfigError):
            GridConfig(delta_alpha=math.radians(7.0))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"r0": 5.0, "r_max": 4.0},
            {"num_cells_m": 1},
            {"radial_division": "manual", "boundaries": (0.5, 3.0, 2.0, 80.0)},
            {"radial_division": "manual", "boundaries": (1.0, 3.0, 80.0)},
            {"radial_division": "spiral"},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            GridConfig(**kwargs)

    def test_linear_negative_growth(self):
        with pytest.raises(ConfigError, match="negative growth"):
            GridConfig(radial_division="linear", d0=1.5, num_cells_m=80)


class TestRadialBounds:
    def test_equidistant_example(self):
        assert radial_bounds(DEFAULT_GRID, 9)[0] == pytest.approx(9.44375, abs=1e-12)
        assert radial_bounds(DEFAULT_GRID, 0)[0] == 0.5
        assert radial_bounds(DEFAULT_GRID, 80) == (80.0, 80.0)
        with pytest.raises(IndexError):
            radial_bounds(DEFAULT_GRID, 81)

    def test_linear_closed_form(self):
        cfg = GridConfig(radial_division="linear", d0=0.05, num_cells_m=80)
        b = radial_boundaries(cfg)
        assert b[0] == 0.5 and abs(b[80] - 80.0) <= 1e-9
        widths = np.diff(b)
        assert widths[0] == pytest.approx(0.05 + 0.5 * (2 * (79.5 - 4.0) / 6400), rel=1e-12)
        np.testing.assert_allclose(np.diff(widths), 2 * (79.5 - 4.0) / 6400, rtol=1e-9)

    def test_manual(self):
        cfg = GridConfig(radial_division="manual", boundaries=manual_14_boundaries())
        assert cfg.num_cells_m == 14
        assert radial_bounds(cfg, 6) == (13.0, 16.0)

    @given(st.sampled_from(["equidistant", "linear"]), st.integers(2, 200))
    def test_monotone(self, mode, m):
        cfg = GridConfig(num_cells_m=m, radial_division=mode, d0=0.01 if mode == "linear" else None)
        b = radial_boundaries(cfg)
        assert np.all(np.diff(b) > 0)
        assert b[0] == cfg.r0 and b[-1] == cfg.r_max


class TestCellIndex:
    def test_examples(self):
        assert cell_index(Point3(0, 10, -1.7), DEFAULT_GRID) == (30, 9)
        assert cell_index(Point3(81, 0, 0), DEFAULT_GRID) is None
        assert cell_index(Point3(0, 0.2, 0), DEFAULT_GRID) is None
        assert cell_index(Point3(-10, 0, -1.7), DEFAULT_GRID)[0] == 0

    def test_seam_from_below_clamps(self):
        i, _ = cell_index(Point3(-10, -1e-15, -1.7), DEFAULT_GRID)
        assert i == 119

    @given(st.floats(-math.pi, math.pi), st.floats(1.0, 40.0), st.floats(0.05, 1.9))
    def test_scale_invariance(self, a, r, c):
        x, y = r * math.cos(a), r * math.sin(a)
        p = cell_index(Point3(x, y, 0), DEFAULT_GRID)
        q = cell_index(Point3(c * x, c * y, 0), DEFAULT_GRID)
        if p is not None and q is not None:
            assert p[0] == q[0]


class TestBuildGrid:
    def test_lowest_z_is_representative(self):
        pts = np.array([[0, 10.0, -1.2], [0.01, 10.0, -1.7], [0.02, 10.0, -1.7]])
        grid, oor = build_grid(pts, DEFAULT_GRID)
        c = grid.cell(30, 9)
        assert c.rep_point.z == -1.7 and c.rep_index == 1
        assert c.point_indices == [0, 1, 2]
        assert c.label == CellLabel.UNKNOWN and len(oor) == 0
        assert grid.cell(0, 0).label == CellLabel.EMPTY and grid.cell(0, 0).rep_point is None

    def test_empty_scan(self):
        with pytest.raises(ValueError):
            build_grid(np.zeros((0, 3)), DEFAULT_GRID)

    def test_exclusion(self):
        pts = np.array([[0, 10.0, -1.7], [0, 200.0, 0.0], [0, 1.0, 0.0]])
        grid, oor = build_grid(pts, DEFAULT_GRID, exclude=np.array([False, False, True]))
        assert list(oor) == [1]
        assert list(grid.cell_id[[1, 2]]) == [-1, -1]

    def test_partition_matches_naive_oracle(self, backend):
        rng = np.random.default_rng(5)
        cfg = GridConfig(delta_alpha=math.radians(10), num_cells_m=12, r0=0.5, r_max=30)
        for _ in range(10):
            pts = np.column_stack([rng.uniform(-35, 35, (300, 2)), rng.normal(-1.7, 0.3, 300)])
            grid, oor = build_grid(pts, cfg)
            np.testing.assert_array_equal(grid.cell_id, naive_assign(pts, cfg))
            assert grid.offsets[-1] + len(oor) == len(pts)

    def test_broadcast_oracle_agrees_with_loop_oracle(self):
        rng = np.random.default_rng(6)
        for cfg in (DEFAULT_GRID, GridConfig(delta_alpha=math.radians(10), num_cells_m=12, r0=0.5, r_max=30)):
            pts = np.column_stack([rng.uniform(-90, 90, (400, 2)), np.zeros(400)])
            pts[:20, 1] = 0.0  # on the seam
            np.testing.assert_array_equal(naive_assign_broadcast(pts, cfg), naive_assign(pts, cfg))

    @given(st.lists(st.tuples(st.floats(-90, 90), st.floats(-90, 90), st.floats(-3, 3)), min_size=1, max_size=80))
    def test_representative_is_cell_minimum(self, raw):
        pts = np.array(raw)
        grid, oor = build_grid(pts, DEFAULT_GRID)
        L, M = grid.shape
        for c in np.unique(grid.cell_id[grid.cell_id >= 0]):
            members = np.flatnonzero(grid.cell_id == c)
            i, j = divmod(int(c), M)
            assert grid.rep[i, j, 2] == pts[members, 2].min()
            first_min = members[np.argmax(pts[members, 2] == pts[members, 2].min())]
            assert grid.rep_index[i, j] == first_min
            assert list(grid.point_indices(i, j)) == list(members)
        assert grid.offsets[-1] + len(oor) == len(pts)


class TestNodes:
    def test_node_geometry(self):
        xy = node_positions(DEFAULT_GRID)
        assert xy.shape == (120, 81, 2)
        np.testing.assert_allclose(xy[0, 0], [-0.5, 0.0], atol=1e-15)
        np.testing.assert_allclose(xy[30, 80], [0.0, 80.0], atol=1e-12)
