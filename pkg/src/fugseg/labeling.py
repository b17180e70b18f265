"""Cell-level ground labeling.

Segment-wise labeling walks each azimuth segment outward from a ground seed
(forward pass) and then back toward the sensor (backward pass); cross-segment
propagation then extends ground labels tangentially along rows.

Index arithmetic inside a segment always refers to the nearest *non-empty*
cell in the stated direction, so empty cells are skipped transparently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernels
from .errors import ConfigError
from .geometry import Point3, SensorModel, adaptive_slope, sigma_xyz_array, traditional_slope
from .polar_grid import CellLabel, PolarGrid

ADAPTIVE = "adaptive"
TRADITIONAL = "traditional"

LEFT_TO_RIGHT = "left_to_right"
RIGHT_TO_LEFT = "right_to_left"
NEAR_TO_FAR = "near_to_far"
FAR_TO_NEAR = "far_to_near"

# Two tangential directions x two row orders.
CGP_SCHEDULE = (
    (LEFT_TO_RIGHT, NEAR_TO_FAR),
    (RIGHT_TO_LEFT, NEAR_TO_FAR),
    (LEFT_TO_RIGHT, FAR_TO_NEAR),
    (RIGHT_TO_LEFT, FAR_TO_NEAR),
)


@dataclass(frozen=True)
class LabelThresholds:
    t_delta_slope: float = math.tan(math.radians(7.0))
    t_delta_r: float = 10.0
    slope_mode: str = ADAPTIVE

    def __post_init__(self):
        if not self.t_delta_slope > 0:
            raise ConfigError("t_delta_slope must be > 0")
        if not self.t_delta_r > 0:
            raise ConfigError("t_delta_r must be > 0")
        if self.slope_mode not in (ADAPTIVE, TRADITIONAL):
            raise ConfigError(f"slope_mode must be {ADAPTIVE!r} or {TRADITIONAL!r}")

    @property
    def adaptive(self) -> bool:
        return self.slope_mode == ADAPTIVE


@dataclass(frozen=True)
class VirtualOrigin:
    """Leveled-ground reference point below the sensor; carries no noise."""

    point: Point3

    @classmethod
    def for_sensor(cls, sensor: SensorModel) -> "VirtualOrigin":
        return cls(Point3(0.0, 0.0, -sensor.mount_height_hs, exact=True))


def rep_sigmas(grid: PolarGrid, sensor: SensorModel) -> np.ndarray:
    """(L, M, 3) per-cell sigmas of the representative points (NaN if empty)."""
    L, M = grid.shape
    return np.ascontiguousarray(sigma_xyz_array(grid.rep.reshape(-1, 3), sensor).reshape(L, M, 3))


def cell_slope(
    a: Union[PolarGrid, VirtualOrigin, tuple, Point3],
    b,
    sensor: SensorModel,
    thresholds: LabelThresholds,
    grid: Optional[PolarGrid] = None,
) -> float:
    """Slope from operand ``a`` to cell ``b`` over representative points.

    Operands are ``(i, j)`` cell indices (resolved against ``grid``), a
    :class:`VirtualOrigin` or a bare :class:`Point3`. Raises
    :class:`~fugseg.errors.ZeroBaselineError` for coincident XY positions.
    """

    def resolve(op):
        if isinstance(op, VirtualOrigin):
            return op.point
        if isinstance(op, Point3):
            return op
        if grid is None:
            raise TypeError("cell operands need a grid")
        rp = grid.cell(*op).rep_point
        if rp is None:
            raise ValueError(f"cell {op} is empty")
        return rp

    pa, pb = resolve(a), resolve(b)
    if thresholds.adaptive:
        return adaptive_slope(pa, pb, sensor)
    return traditional_slope(pa, pb)


class _LabelingState:
    """Arrays handed to the kernels for one grid."""

    def __init__(self, grid: PolarGrid, sensor: SensorModel, thresholds: LabelThresholds):
        self.grid = grid
        self.rep = np.ascontiguousarray(grid.rep)
        self.sig = rep_sigmas(grid, sensor)
        self.origin_z = -float(sensor.mount_height_hs)
        self.t_h = float(sensor.seed_height_th)
        self.t_slope = float(thresholds.t_delta_slope)
        self.t_dr = float(thresholds.t_delta_r)
        self.adaptive = bool(thresholds.adaptive)
        if grid.labels.dtype != np.int8 or not grid.labels.flags.c_contiguous:
            grid.labels = np.ascontiguousarray(grid.labels, dtype=np.int8)


def select_seed(grid: PolarGrid, i: int, sensor: SensorModel, thresholds: LabelThresholds) -> Optional[int]:
    """Nearest cell of segment ``i`` qualifying as a ground seed, or None."""
    st = _LabelingState(grid, sensor, thresholds)
    j = _kernels.backend.select_seed(st.rep, st.sig, grid.labels, int(i), st.origin_z, st.t_h, st.t_slope, st.adaptive)
    return None if j < 0 else int(j)


def label_segment(grid: PolarGrid, i: int, j_seed: int, sensor: SensorModel, thresholds: LabelThresholds) -> None:
    """Forward and backward labeling of segment ``i`` from ``j_seed`` (in place)."""
    if grid.labels[i, j_seed] == CellLabel.EMPTY:
        raise ValueError(f"seed cell ({i}, {j_seed}) is empty")
    st = _LabelingState(grid, sensor, thresholds)
    _kernels.backend.label_segment(
        st.rep, st.sig, grid.labels, int(i), int(j_seed), st.origin_z, st.t_slope, st.t_dr, st.adaptive
    )


def segment_wise_labeling(grid: PolarGrid, sensor: SensorModel, thresholds: LabelThresholds) -> np.ndarray:
    """Seed selection plus forward/backward labeling for every segment.

    Returns the per-segment seed index (-1 where no seed qualifies).
    """
    st = _LabelingState(grid, sensor, thresholds)
    return _kernels.backend.sgl(st.rep, st.sig, grid.labels, st.origin_z, st.t_h, st.t_slope, st.t_dr, st.adaptive)


def slope_vertical(grid: PolarGrid, i: int, j: int, sensor: SensorModel, thresholds: LabelThresholds) -> Optional[float]:
    """Radial slope of cell (i, j) against a ground neighbor in its segment.

    The inner neighbor (j-1) takes precedence; returns None when neither
    radial neighbor is ground.
    """
    st = _LabelingState(grid, sensor, thresholds)
    s = _kernels.backend.slope_vertical(st.rep, st.sig, grid.labels, int(i), int(j), st.adaptive)
    return None if math.isinf(s) else float(s)


def propagate_cross_segment(
    grid: PolarGrid,
    direction: str,
    row_order: str,
    sensor: SensorModel,
    thresholds: LabelThresholds,
    wrap_azimuth: bool = False,
) -> int:
    """One tangential propagation pass; returns the number of cells relabeled."""
    if direction not in (LEFT_TO_RIGHT, RIGHT_TO_LEFT):
        raise ValueError(f"bad direction {direction!r}")
    if row_order not in (NEAR_TO_FAR, FAR_TO_NEAR):
        raise ValueError(f"bad row order {row_order!r}")
    st = _LabelingState(grid, sensor, thresholds)
    return int(
        _kernels.backend.cgp_pass(
            st.rep,
            st.sig,
            grid.labels,
            direction == LEFT_TO_RIGHT,
            row_order == NEAR_TO_FAR,
            st.t_slope,
            st.adaptive,
            bool(wrap_azimuth),
        )
    )


def finalize_unknown(grid: PolarGrid) -> None:
    grid.labels[grid.labels == CellLabel.UNKNOWN] = CellLabel.OBJECT


def label_grid(
    grid: PolarGrid,
    sensor: SensorModel,
    thresholds: LabelThresholds,
    *,
    cgp: bool = True,
    wrap_azimuth: bool = False,
) -> PolarGrid:
    """Full cell labeling: SGL on every segment, the CGP schedule, then
    unreached non-empty cells become OBJECT. Mutates and returns ``grid``."""
    st = _LabelingState(grid, sensor, thresholds)
    be = _kernels.backend
    be.sgl(st.rep, st.sig, grid.labels, st.origin_z, st.t_h, st.t_slope, st.t_dr, st.adaptive)
    if cgp:
        for direction, order in CGP_SCHEDULE:
            be.cgp_pass(
                st.rep,
                st.sig,
                grid.labels,
                direction == LEFT_TO_RIGHT,
                order == NEAR_TO_FAR,
                st.t_slope,
                st.adaptive,
                bool(wrap_azimuth),
            )
    finalize_unknown(grid)
    return grid
