"""Fast uncertainty-aware ground segmentation for LiDAR point clouds."""
from ._kernels import BACKEND_NAME
from .elevation import ClassifyThresholds, NodeHeightMap
from .errors import FugSegError
from .geometry import Point3, SensorModel, sensor_preset
from .labeling import LabelThresholds
from .pipeline import EgoBox, FugSegConfig, SegmentationResult, run_scan
from .polar_grid import CellLabel, GridConfig, PolarGrid, build_grid

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "CellLabel",
    "ClassifyThresholds",
    "EgoBox",
    "FugSegConfig",
    "FugSegError",
    "GridConfig",
    "LabelThresholds",
    "NodeHeightMap",
    "Point3",
    "PolarGrid",
    "SegmentationResult",
    "SensorModel",
    "build_grid",
    "run_scan",
    "sensor_preset",
]
