"""Ground elevation estimation and point-level classification.

Node heights are estimated in three steps: nodes touching ground cells
(exp(-distance) weighted mean of representative Z), a four-path sweep that
carries ground Z into noisy-ground cells, then nodes touching only
noisy-ground cells using those estimates. Points are classified against the
elevation interpolated from the four corner nodes of their cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, UnsupportedCellError
from .geometry import Point3
from .polar_grid import CellLabel, GridConfig, PolarGrid, node_positions, radial_boundaries

# Index of each sweep in the last axis of PropagatedZ arrays.
ROW_LEFT_TO_RIGHT, ROW_RIGHT_TO_LEFT, SEG_NEAR_TO_FAR, SEG_FAR_TO_NEAR = range(4)


@dataclass(frozen=True)
class ClassifyThresholds:
    t_z: float = 0.15

    def __post_init__(self):
        if not self.t_z > 0:
            raise ConfigError("t_z must be > 0")


@dataclass
class NodeHeightMap:
    heights: np.ndarray  # (L, M+1), NaN = undefined
    node_xy: np.ndarray  # (L, M+1, 2)

    def defined(self) -> np.ndarray:
        return ~np.isnan(self.heights)

    def height(self, i: int, j: int):
        h = self.heights[i, j]
        return None if np.isnan(h) else float(h)


@dataclass
class PropagatedZ:
    """Sources received by each cell, one slot per sweep direction."""

    source_z: np.ndarray  # (L, M, 4), NaN where nothing arrived
    source_distance: np.ndarray  # (L, M, 4)

    def sources(self, i: int, j: int) -> list:
        out = []
        for k in range(4):
            z = self.source_z[i, j, k]
            if not np.isnan(z):
                out.append((k, float(z), float(self.source_distance[i, j, k])))
        return out


def _node_xy(grid: PolarGrid) -> np.ndarray:
    return np.ascontiguousarray(node_positions(grid.config, grid.bounds))


def ground_node_heights(grid: PolarGrid) -> NodeHeightMap:
    L, M = grid.shape
    node_xy = _node_xy(grid)
    H = np.full((L, M + 1), np.nan)
    rep = np.ascontiguousarray(grid.rep)
    mask = np.ascontiguousarray(grid.labels == CellLabel.GROUND, dtype=np.uint8)
    zval = np.ascontiguousarray(rep[:, :, 2])
    _kernels.backend.node_heights(rep, zval, mask, node_xy, H)
    return NodeHeightMap(H, node_xy)


def propagate_z_four_paths(grid: PolarGrid) -> PropagatedZ:
    src_z, src_d = _kernels.backend.propagate_four_paths(np.ascontiguousarray(grid.rep), grid.labels)
    return PropagatedZ(src_z, src_d)


def estimate_noisy_ground_heights(grid: PolarGrid, propagated: PropagatedZ) -> np.ndarray:
    """Weighted mean of the propagated Z per noisy-ground cell.

    Writes ``grid.est_ground_z``; noisy cells that received nothing are
    relabeled OBJECT. Returns the estimate array.
    """
    noisy = grid.labels == CellLabel.NOISY_GROUND
    z = propagated.source_z
    valid = ~np.isnan(z)
    w = np.where(valid, np.exp(-np.where(valid, propagated.source_distance, 0.0)), 0.0)
    num = np.where(valid, w * np.where(valid, z, 0.0), 0.0).sum(axis=2)
    den = w.sum(axis=2)
    supported = noisy & valid.any(axis=2)
    est = np.full(grid.shape, np.nan)
    est[supported] = num[supported] / den[supported]
    grid.labels[noisy & ~supported] = CellLabel.OBJECT
    grid.est_ground_z = est
    return est


def noisy_node_heights(grid: PolarGrid, nodes: NodeHeightMap) -> NodeHeightMap:
    """Fill still-undefined nodes around noisy-ground cells; step-1 heights stay."""
    H = np.ascontiguousarray(nodes.heights.copy())
    mask = np.ascontiguousarray(grid.labels == CellLabel.NOISY_GROUND, dtype=np.uint8)
    zval = np.ascontiguousarray(np.nan_to_num(grid.est_ground_z, nan=0.0))
    _kernels.backend.node_heights(np.ascontiguousarray(grid.rep), zval, mask, nodes.node_xy, H)
    return NodeHeightMap(H, nodes.node_xy)


def estimate_elevation(grid: PolarGrid) -> NodeHeightMap:
    """All three node-height steps in order."""
    nodes = ground_node_heights(grid)
    estimate_noisy_ground_heights(grid, propagate_z_four_paths(grid))
    return noisy_node_heights(grid, nodes)


def interpolation_weights(p: Point3, cell: tuple, config: GridConfig):
    """(W_bl, W_br, W_tl, W_tr) for a point inside cell (i, j); they sum to 4."""
    i, j = cell
    bounds = radial_boundaries(config)
    v = (math.pi - math.atan2(p.y, p.x)) / config.delta_alpha
    a1 = min(max(v - i, 0.0), 1.0)
    r = math.sqrt(p.x * p.x + p.y * p.y)
    b1 = min(max((r - bounds[j]) / (bounds[j + 1] - bounds[j]), 0.0), 1.0)
    a2 = 1.0 - a1
    b2 = 1.0 - b1
    return (a2 + b2, a1 + b2, a2 + b1, a1 + b1)


def corner_heights(nodes: NodeHeightMap, cell: tuple):
    """(H_bl, H_br, H_tl, H_tr) of cell (i, j); corners wrap across the seam."""
    i, j = cell
    L = nodes.heights.shape[0]
    ip = (i + 1) % L
    h = nodes.heights
    return (h[i, j], h[ip, j], h[i, j + 1], h[ip, j + 1])


def interpolate_elevation(p: Point3, cell: tuple, nodes: NodeHeightMap, config: GridConfig) -> float:
    hs = corner_heights(nodes, cell)
    if any(np.isnan(h) for h in hs):
        raise UnsupportedCellError(f"unsupported cell {tuple(cell)}: undefined node height")
    ws = interpolation_weights(p, cell, config)
    return float(sum(w * h for w, h in zip(ws, hs)) / sum(ws))


def classify_points(grid: PolarGrid, nodes: NodeHeightMap, t: ClassifyThresholds):
    """Per-point (is_ground, elevation) for every point of the grid's scan.

    Ground cells use a one-sided test (z < E + t_z); noisy-ground cells a
    two-sided one (|z - E| < t_z). Everything else is non-ground with NaN
    elevation.
    """
    L, M = grid.shape
    ground, elev = _kernels.backend.classify(
        grid.points,
        grid.cell_id,
        np.ascontiguousarray(grid.labels.reshape(-1)),
        np.ascontiguousarray(nodes.heights),
        grid.bounds,
        float(grid.config.delta_alpha),
        L,
        M,
        float(t.t_z),
    )
    return ground.astype(bool), elev


__all__ = [
    "ClassifyThresholds",
    "NodeHeightMap",
    "PropagatedZ",
    "classify_points",
    "corner_heights",
    "estimate_elevation",
    "estimate_noisy_ground_heights",
    "ground_node_heights",
    "interpolate_elevation",
    "interpolation_weights",
    "noisy_node_heights",
    "propagate_z_four_paths",
]
