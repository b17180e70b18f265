"""End-to-end segmentation of one scan."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .elevation import ClassifyThresholds, NodeHeightMap, classify_points, estimate_elevation
from .errors import ConfigError
from .geometry import SensorModel, sensor_preset
from .labeling import LabelThresholds, label_grid
from .polar_grid import GridConfig, PolarGrid, as_points_array, build_grid

STAGES = ("PGM", "UGL", "EGE", "PGS")


@dataclass(frozen=True)
class EgoBox:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max and self.z_min < self.z_max):
            raise ConfigError("ego box needs min < max on every axis")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Strict-interior test; points on a face are outside."""
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        return (
            (x > self.x_min) & (x < self.x_max)
            & (y > self.y_min) & (y < self.y_max)
            & (z > self.z_min) & (z < self.z_max)
        )


@dataclass(frozen=True)
class FugSegConfig:
    sensor: SensorModel = field(default_factory=lambda: sensor_preset("hdl64e"))
    grid: GridConfig = field(default_factory=GridConfig)
    labeling: LabelThresholds = field(default_factory=LabelThresholds)
    classify: ClassifyThresholds = field(default_factory=ClassifyThresholds)
    ego_box: Optional[EgoBox] = None
    cgp_wrap_azimuth: bool = False
    # Ablation switch: skip cross-segment propagation.
    cgp: bool = True


@dataclass
class SegmentationResult:
    ground: np.ndarray  # (N,) bool
    elevation: np.ndarray  # (N,) float64, NaN where undefined
    cell_labels: np.ndarray  # (L, M) int8 CellLabel
    nodes: NodeHeightMap
    timings_us: dict  # stage -> microseconds
    total_us: float
    grid: PolarGrid = field(repr=False, default=None)

    @property
    def labels(self) -> np.ndarray:
        """Per-point 1 = ground, 0 = non-ground."""
        return self.ground.astype(np.uint8)

    def same_as(self, other: "SegmentationResult") -> bool:
        """Bit-identical labels, elevations, cell labels and node heights."""
        return (
            np.array_equal(self.ground, other.ground)
            and np.array_equal(self.elevation, other.elevation, equal_nan=True)
            and np.array_equal(self.cell_labels, other.cell_labels)
            and np.array_equal(self.nodes.heights, other.nodes.heights, equal_nan=True)
        )


def apply_ego_filter(scan, ego_box: Optional[EgoBox]) -> np.ndarray:
    """Boolean mask of points inside the ego box (all False without a box)."""
    pts = as_points_array(scan)
    if ego_box is None:
        return np.zeros(len(pts), dtype=bool)
    return ego_box.contains(pts)


def run_scan(scan, config: FugSegConfig) -> SegmentationResult:
    pts = as_points_array(scan)
    if len(pts) == 0:
        raise ValueError("empty scan")
    clock = time.perf_counter_ns
    t_start = clock()

    excluded = apply_ego_filter(pts, config.ego_box)
    grid, _ = build_grid(pts, config.grid, exclude=excluded if excluded.any() else None)
    t_pgm = clock()

    label_grid(grid, config.sensor, config.labeling, cgp=config.cgp, wrap_azimuth=config.cgp_wrap_azimuth)
    t_ugl = clock()

    nodes = estimate_elevation(grid)
    t_ege = clock()

    # out-of-range and ego points carry cell_id -1 and come back non-ground
    ground, elevation = classify_points(grid, nodes, config.classify)
    t_pgs = clock()

    stamps = (t_start, t_pgm, t_ugl, t_ege, t_pgs)
    timings = {name: (stamps[k + 1] - stamps[k]) / 1000.0 for k, name in enumerate(STAGES)}
    return SegmentationResult(
        ground=ground,
        elevation=elevation,
        cell_labels=grid.labels,
        nodes=nodes,
        timings_us=timings,
        total_us=(clock() - t_start) / 1000.0,
        grid=grid,
    )
