"""Polar grid mapping: L azimuth segments x M radial cells over the XY plane."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import ConfigError
from .geometry import Point3

# Snap tolerance (in units of one segment width) applied before flooring the
# azimuth index, so points exactly on a segment boundary land in the upper
# segment despite the rounding of pi/delta_alpha.
AZIMUTH_SNAP = 1e-9

RADIAL_DIVISIONS = ("equidistant", "linear", "manual")


class CellLabel(IntEnum):
    EMPTY = 0
    UNKNOWN = 1
    GROUND = 2
    NOISY_GROUND = 3
    OBJECT = 4


@dataclass(frozen=True)
class GridConfig:
    """Polar grid geometry.

    ``radial_division`` selects how ``[r0, r_max)`` is split into
    ``num_cells_m`` cells: ``"equidistant"`` (default), ``"linear"`` (cell
    length grows linearly from ``d0``) or ``"manual"`` (explicit
    ``boundaries``, which then fix ``num_cells_m``).
    """

    delta_alpha: float = math.radians(3.0)
    num_cells_m: int = 80
    r0: float = 0.5
    r_max: float = 80.0
    radial_division: str = "equidistant"
    d0: Optional[float] = None
    boundaries: Optional[tuple] = None

    def __post_init__(self):
        if not self.delta_alpha > 0:
            raise ConfigError("delta_alpha must be > 0")
        ratio = 2 * math.pi / self.delta_alpha
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError(
                f"delta_alpha={math.degrees(self.delta_alpha):g} deg does not divide 360 deg evenly"
            )
        if self.radial_division not in RADIAL_DIVISIONS:
            raise ConfigError(f"radial_division must be one of {RADIAL_DIVISIONS}")
        if self.radial_division == "manual":
            if self.boundaries is None:
                raise ConfigError("manual radial division requires boundaries")
            b = tuple(float(v) for v in self.boundaries)
            object.__setattr__(self, "boundaries", b)
            if len(b) < 3 or any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
                raise ConfigError("manual boundaries must be strictly increasing with >= 2 cells")
            if b[0] != self.r0 or b[-1] != self.r_max:
                raise ConfigError("manual boundaries must start at r0 and end at r_max")
            object.__setattr__(self, "num_cells_m", len(b) - 1)
        if not self.r0 < self.r_max:
            raise ConfigError("r0 must be < r_max")
        if self.r0 < 0:
            raise ConfigError("r0 must be >= 0")
        if int(self.num_cells_m) != self.num_cells_m or self.num_cells_m < 2:
            raise ConfigError("num_cells_m must be an integer >= 2")
        object.__setattr__(self, "num_cells_m", int(self.num_cells_m))
        if self.radial_division == "linear":
            if self.d0 is None or not self.d0 > 0:
                raise ConfigError("linear radial division requires d0 > 0")
            if self.d0 * self.num_cells_m > self.r_max - self.r0:
                raise ConfigError("negative growth: d0 * M exceeds r_max - r0")

    @property
    def num_segments_l(self) -> int:
        return int(round(2 * math.pi / self.delta_alpha))

    @property
    def shape(self) -> tuple:
        return (self.num_segments_l, self.num_cells_m)


def radial_boundaries(config: GridConfig) -> np.ndarray:
    """All M+1 radial boundaries; entry 0 is r0 and entry M is r_max exactly."""
    M = config.num_cells_m
    j = np.arange(M + 1, dtype=np.float64)
    if config.radial_division == "equidistant":
        b = config.r0 + j * ((config.r_max - config.r0) / M)
    elif config.radial_division == "linear":
        a = 2.0 * ((config.r_max - config.r0) - config.d0 * M) / (M * M)
        b = 0.5 * a * j * j + config.d0 * j + config.r0
    else:
        b = np.array(config.boundaries, dtype=np.float64)
    b[0] = config.r0
    b[-1] = config.r_max
    return b


def radial_bounds(config: GridConfig, j: int) -> tuple:
    """(r_j, r_{j+1}); for j == M both entries equal r_max."""
    M = config.num_cells_m
    if not 0 <= j <= M:
        raise IndexError(f"cell index {j} outside [0, {M}]")
    b = radial_boundaries(config)
    return float(b[j]), float(b[min(j + 1, M)])


def segment_coordinate(x, y, delta_alpha):
    """Continuous azimuth coordinate (pi - atan2(y, x)) / delta_alpha."""
    return (np.pi - np.arctan2(y, x)) / delta_alpha


def cell_index(p: Point3, config: GridConfig):
    """(i, j) of the cell containing ``p``, or ``None`` when out of range."""
    r = math.hypot(p.x, p.y)
    if not (config.r0 <= r < config.r_max):
        return None
    L = config.num_segments_l
    v = (math.pi - math.atan2(p.y, p.x)) / config.delta_alpha
    i = min(max(int(math.floor(v + AZIMUTH_SNAP)), 0), L - 1)
    b = radial_boundaries(config)
    j = int(np.searchsorted(b, r, side="right")) - 1
    return i, min(j, config.num_cells_m - 1)


@dataclass
class Cell:
    rep_point: Optional[Point3]
    rep_index: Optional[int]
    point_indices: list
    label: CellLabel
    est_ground_z: Optional[float] = None


@dataclass
class PolarGrid:
    """Dense L x M grid built from one scan.

    Per-cell state lives in arrays so the kernels can work on it directly;
    :meth:`cell` returns a :class:`Cell` view for inspection.
    """

    config: GridConfig
    bounds: np.ndarray
    points: np.ndarray  # (N, 3) float64, the full scan
    cell_id: np.ndarray  # (N,) flat cell id i*M + j, -1 if not binned
    order: np.ndarray  # binned point indices grouped by cell, scan order inside a cell
    offsets: np.ndarray  # (L*M + 1,) CSR offsets into ``order``
    rep_index: np.ndarray  # (L, M) int64, -1 for empty cells
    rep: np.ndarray  # (L, M, 3) float64, NaN for empty cells
    labels: np.ndarray  # (L, M) int8 CellLabel values
    est_ground_z: np.ndarray = field(default=None)  # (L, M) float64, NaN when absent

    def __post_init__(self):
        if self.est_ground_z is None:
            self.est_ground_z = np.full(self.labels.shape, np.nan)

    @property
    def shape(self) -> tuple:
        return self.labels.shape

    @property
    def nonempty(self) -> np.ndarray:
        return self.rep_index >= 0

    def point_indices(self, i: int, j: int) -> np.ndarray:
        c = i * self.config.num_cells_m + j
        return self.order[self.offsets[c] : self.offsets[c + 1]]

    def cell(self, i: int, j: int) -> Cell:
        k = int(self.rep_index[i, j])
        est = self.est_ground_z[i, j]
        return Cell(
            rep_point=None if k < 0 else Point3(*map(float, self.rep[i, j])),
            rep_index=None if k < 0 else k,
            point_indices=[int(v) for v in self.point_indices(i, j)],
            label=CellLabel(int(self.labels[i, j])),
            est_ground_z=None if np.isnan(est) else float(est),
        )

    def copy(self) -> "PolarGrid":
        return PolarGrid(
            config=self.config,
            bounds=self.bounds,
            points=self.points,
            cell_id=self.cell_id,
            order=self.order,
            offsets=self.offsets,
            rep_index=self.rep_index,
            rep=self.rep,
            labels=self.labels.copy(),
            est_ground_z=self.est_ground_z.copy(),
        )


def as_points_array(scan) -> np.ndarray:
    """Coerce a scan (ndarray, list of Point3 or of triples) to (N, 3) float64."""
    if isinstance(scan, np.ndarray):
        arr = scan
    else:
        scan = list(scan)
        if scan and isinstance(scan[0], Point3):
            arr = np.array([(p.x, p.y, p.z) for p in scan], dtype=np.float64)
        else:
            arr = np.asarray(scan, dtype=np.float64)
    arr = np.ascontiguousarray(arr[:, :3] if arr.ndim == 2 else arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) point array, got shape {arr.shape}")
    return arr


def build_grid(scan, config: GridConfig, exclude: Optional[np.ndarray] = None):
    """Bin a scan into the polar grid.

    Returns ``(grid, out_of_range)`` where ``out_of_range`` holds the indices
    of points whose XY radius falls outside ``[r0, r_max)``. Points flagged
    in ``exclude`` are neither binned nor reported as out of range.
    """
    pts = as_points_array(scan)
    if len(pts) == 0:
        raise ValueError("empty scan")
    n = len(pts)
    include = np.ones(n, dtype=np.uint8)
    if exclude is not None:
        include[np.asarray(exclude, dtype=bool)] = 0
    L, M = config.shape
    bounds = radial_boundaries(config)
    cell_id, rep_index, order, offsets = _kernels.backend.bin_points(
        pts, include, bounds, float(config.delta_alpha), L, M
    )
    rep_index = rep_index.reshape(L, M)
    rep = np.full((L, M, 3), np.nan)
    filled = rep_index >= 0
    rep[filled] = pts[rep_index[filled]]
    labels = np.where(filled, np.int8(CellLabel.UNKNOWN), np.int8(CellLabel.EMPTY)).astype(np.int8)
    out_of_range = np.flatnonzero((cell_id < 0) & (include == 1))
    grid = PolarGrid(
        config=config,
        bounds=bounds,
        points=pts,
        cell_id=cell_id,
        order=order,
        offsets=offsets,
        rep_index=rep_index,
        rep=rep,
        labels=labels,
    )
    return grid, out_of_range


def node_positions(config: GridConfig, bounds: Optional[np.ndarray] = None) -> np.ndarray:
    """XY of every grid node as an (L, M+1, 2) array.

    Node (i, j) sits at radius ``bounds[j]`` on the azimuth boundary between
    segments i-1 and i, i.e. at ``atan2`` angle ``pi - i * delta_alpha``.
    """
    if bounds is None:
        bounds = radial_boundaries(config)
    L = config.num_segments_l
    ang = np.pi - np.arange(L) * config.delta_alpha
    out = np.empty((L, len(bounds), 2))
    out[:, :, 0] = np.cos(ang)[:, None] * bounds[None, :]
    out[:, :, 1] = np.sin(ang)[:, None] * bounds[None, :]
    return out


def manual_14_boundaries() -> tuple:
    """Example piecewise-equidistant table with 14 cells over [0.5, 80) m."""
    return (0.5, 2.0, 4.0, 6.0, 8.0, 10.0, 13.0, 16.0, 20.0, 25.0, 30.0, 40.0, 50.0, 65.0, 80.0)


def row_cells(grid: PolarGrid, j: int) -> Sequence[tuple]:
    return [(i, j) for i in range(grid.shape[0])]
