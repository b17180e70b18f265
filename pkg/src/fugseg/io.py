"""File formats: KITTI-style scans and labels, configs, label mappings, outputs.

Binary formats are little-endian regardless of host byte order:

* ``.bin`` scans: float32 quadruples ``x, y, z, intensity``.
* ``.label`` files: one uint32 per point; the lower 16 bits are the semantic
  class, the upper 16 the instance id (discarded).
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .elevation import ClassifyThresholds, NodeHeightMap
from .errors import ConfigError, FormatError
from .geometry import SENSOR_TABLE, SensorModel
from .labeling import ADAPTIVE, LabelThresholds
from .pipeline import EgoBox, FugSegConfig, SegmentationResult
from .polar_grid import GridConfig

DATA_DIR = Path(__file__).resolve().parent / "data"

_F32 = np.dtype("<f4")
_U32 = np.dtype("<u4")


@dataclass
class ScanRecord:
    points: np.ndarray  # (N, 3) float64 (exact widening of the stored float32)
    intensity: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.points)
        for name in ("intensity", "labels"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != n:
                raise ValueError(f"{name} has {len(arr)} entries for {n} points")

    def __len__(self):
        return len(self.points)


# -- point clouds and labels -------------------------------------------------


def read_point_cloud_bin(path) -> ScanRecord:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) % 16:
        whole = len(raw) // 16
        raise FormatError(
            f"{path}: size {len(raw)} is not a multiple of 16; truncated record at byte offset {whole * 16}"
        )
    arr = np.frombuffer(raw, dtype=_F32).reshape(-1, 4)
    bad = np.flatnonzero(~np.isfinite(arr).all(axis=1))
    if len(bad):
        shown = ", ".join(str(int(k)) for k in bad[:10])
        more = "" if len(bad) <= 10 else f" (+{len(bad) - 10} more)"
        raise FormatError(f"{path}: non-finite values at point index {shown}{more}")
    return ScanRecord(points=arr[:, :3].astype(np.float64), intensity=arr[:, 3].astype(np.float64))


def write_point_cloud_bin(record: ScanRecord, path) -> None:
    n = len(record.points)
    out = np.zeros((n, 4), dtype=_F32)
    out[:, :3] = record.points
    if record.intensity is not None:
        out[:, 3] = record.intensity
    Path(path).write_bytes(out.tobytes())


def read_labels(path) -> np.ndarray:
    """Semantic class id per point (uint32 lower 16 bits)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) % 4:
        raise FormatError(f"{path}: size {len(raw)} is not a multiple of 4")
    return (np.frombuffer(raw, dtype=_U32) & 0xFFFF).astype(np.int64)


def write_labels(labels, path, instance=None) -> None:
    vals = np.asarray(labels, dtype=np.uint32) & 0xFFFF
    if instance is not None:
        vals = vals | (np.asarray(instance, dtype=np.uint32) << 16)
    Path(path).write_bytes(vals.astype(_U32).tobytes())


# -- label mappings ----------------------------------------------------------


@dataclass(frozen=True)
class LabelMapping:
    ground_classes: frozenset
    ignore_classes: frozenset = frozenset()
    name: str = ""

    def __post_init__(self):
        both = set(self.ground_classes) & set(self.ignore_classes)
        if both:
            raise ConfigError(f"classes {sorted(both)} are both ground and ignored")

    def ground_mask(self, classes) -> np.ndarray:
        return np.isin(np.asarray(classes), list(self.ground_classes))

    def ignore_mask(self, classes) -> np.ndarray:
        return np.isin(np.asarray(classes), list(self.ignore_classes))


def _parse_ids(text: str, where: str) -> frozenset:
    out = set()
    for tok in text.replace("\n", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.add(int(tok))
        except ValueError:
            raise FormatError(f"{where}: bad class id {tok!r}") from None
    return frozenset(out)


def load_label_mapping(path) -> LabelMapping:
    """Read a mapping file with ``[ground] ids = ...`` and ``[ignore] ids = ...``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise FormatError(f"{path}: {exc}") from None
    for sec in cp.sections():
        if sec not in ("ground", "ignore"):
            raise FormatError(f"{path}: unknown section [{sec}]")
    if not cp.has_option("ground", "ids"):
        raise FormatError(f"{path}: missing [ground] ids")
    ground = _parse_ids(cp.get("ground", "ids"), str(path))
    ignore = _parse_ids(cp.get("ignore", "ids", fallback=""), str(path))
    try:
        return LabelMapping(ground, ignore, name=Path(path).stem)
    except ConfigError as exc:
        raise FormatError(f"{path}: {exc}") from None


def semantickitti_mapping() -> LabelMapping:
    return load_label_mapping(DATA_DIR / "semantickitti.map")


# -- configuration -----------------------------------------------------------

# Angles may be written in degrees (``*_deg``) or radians (``*_rad``).
_SECTIONS = {
    "sensor": {"preset", "sigma_r", "sigma_phi", "sigma_theta", "h_s", "t_h", "k_sigma"},
    "grid": {"delta_alpha", "m", "r0", "r_max", "radial_division", "d0", "boundaries"},
    "thresholds": {"t_delta_slope", "t_delta_r", "t_z", "slope_mode", "cgp", "cgp_wrap_azimuth"},
    "ego": {"x_min", "x_max", "y_min", "y_max", "z_min", "z_max"},
}
_ANGLE_KEYS = {"sigma_phi", "sigma_theta", "delta_alpha", "t_delta_slope"}


class _Section:
    """Typed access to one config section with angle-suffix resolution."""

    def __init__(self, name, items, path):
        self.name = name
        self.path = path
        self.values = {}
        allowed = _SECTIONS[name]
        for key, raw in items:
            base, unit = key, None
            for suffix in ("_deg", "_rad"):
                if key.endswith(suffix) and key[: -len(suffix)] in _ANGLE_KEYS:
                    base, unit = key[: -len(suffix)], suffix[1:]
            if base not in allowed or (base in _ANGLE_KEYS and unit is None and base != "t_delta_slope"):
                raise ConfigError(f"{path}: unknown key {key!r} in [{name}]")
            if base in self.values:
                raise ConfigError(f"{path}: key {base!r} given twice in [{name}]")
            self.values[base] = (raw, unit)

    def has(self, key):
        return key in self.values

    def text(self, key, default=None):
        return self.values[key][0].strip() if key in self.values else default

    def number(self, key, default=None):
        if key not in self.values:
            return default
        raw, unit = self.values[key]
        try:
            v = float(raw)
        except ValueError:
            raise ConfigError(f"{self.path}: [{self.name}] {key} = {raw!r} is not a number") from None
        if not math.isfinite(v):
            raise ConfigError(f"{self.path}: [{self.name}] {key} must be finite")
        return math.radians(v) if unit == "deg" else v

    def integer(self, key, default=None):
        v = self.number(key, None)
        if v is None:
            return default
        if v != int(v):
            raise ConfigError(f"{self.path}: [{self.name}] {key} must be an integer")
        return int(v)

    def flag(self, key, default=False):
        t = self.text(key)
        if t is None:
            return default
        t = t.lower()
        if t in ("1", "true", "yes", "on"):
            return True
        if t in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{self.path}: [{self.name}] {key} must be a boolean")


def _sensor_from(sec: _Section, path) -> SensorModel:
    base = {}
    preset = sec.text("preset")
    if preset is not None:
        name = preset.lower()
        if name not in SENSOR_TABLE:
            raise ConfigError(f"{path}: unknown sensor preset {preset!r}")
        sr, sp, st, hs, th = SENSOR_TABLE[name]
        base = dict(sigma_r=sr, sigma_phi=math.radians(sp), sigma_theta=math.radians(st), h_s=hs, t_h=th)
    vals = {}
    for key in ("sigma_r", "sigma_phi", "sigma_theta", "h_s"):
        v = sec.number(key, base.get(key))
        if v is None:
            raise ConfigError(f"{path}: [sensor] missing {key}")
        vals[key] = v
    # Unstated seed threshold: 0.3 m above the leveled ground.
    t_h = sec.number("t_h", base.get("t_h", -vals["h_s"] + 0.3))
    return SensorModel(
        sigma_r=vals["sigma_r"],
        sigma_phi=vals["sigma_phi"],
        sigma_theta=vals["sigma_theta"],
        mount_height_hs=vals["h_s"],
        seed_height_th=t_h,
        k_sigma=sec.number("k_sigma", 1.0),
    )


def _grid_from(sec: _Section, path) -> GridConfig:
    division = (sec.text("radial_division", "equidistant") or "equidistant").lower()
    boundaries = None
    if sec.has("boundaries"):
        try:
            boundaries = tuple(float(t) for t in sec.text("boundaries").replace("\n", ",").split(",") if t.strip())
        except ValueError:
            raise ConfigError(f"{path}: [grid] boundaries must be a comma-separated list of numbers") from None
    r0 = sec.number("r0", 0.5)
    r_max = sec.number("r_max", 80.0)
    m = sec.integer("m", 80 if boundaries is None else len(boundaries) - 1)
    if boundaries is not None and division == "manual":
        r0, r_max = sec.number("r0", boundaries[0]), sec.number("r_max", boundaries[-1])
    return GridConfig(
        delta_alpha=sec.number("delta_alpha", math.radians(3.0)),
        num_cells_m=m,
        r0=r0,
        r_max=r_max,
        radial_division=division,
        d0=sec.number("d0"),
        boundaries=boundaries,
    )


def parse_config(text: str, path="<string>") -> FugSegConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for name in cp.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"{path}: unknown section [{name}]")
    secs = {name: _Section(name, cp.items(name) if cp.has_section(name) else [], path) for name in _SECTIONS}
    if not cp.has_section("sensor"):
        raise ConfigError(f"{path}: missing [sensor] section")

    th = secs["thresholds"]
    labeling = LabelThresholds(
        t_delta_slope=_slope_threshold(th),
        t_delta_r=th.number("t_delta_r", 10.0),
        slope_mode=(th.text("slope_mode", ADAPTIVE) or ADAPTIVE).lower(),
    )
    classify = ClassifyThresholds(t_z=th.number("t_z", 0.15))

    ego = None
    eg = secs["ego"]
    if eg.values:
        keys = ("x_min", "x_max", "y_min", "y_max", "z_min", "z_max")
        missing = [k for k in keys if not eg.has(k)]
        if missing:
            raise ConfigError(f"{path}: [ego] missing {', '.join(missing)}")
        ego = EgoBox(*(eg.number(k) for k in keys))

    return FugSegConfig(
        sensor=_sensor_from(secs["sensor"], path),
        grid=_grid_from(secs["grid"], path),
        labeling=labeling,
        classify=classify,
        ego_box=ego,
        cgp_wrap_azimuth=th.flag("cgp_wrap_azimuth", False),
        cgp=th.flag("cgp", True),
    )


def _slope_threshold(sec: _Section) -> float:
    """Slope-change threshold as a tangent.

    ``t_delta_slope_deg`` / ``t_delta_slope_rad`` give an angle whose tangent
    is used; a bare ``t_delta_slope`` is already a tangent.
    """
    if not sec.has("t_delta_slope"):
        return math.tan(math.radians(7.0))
    unit = sec.values["t_delta_slope"][1]
    v = sec.number("t_delta_slope")
    return v if unit is None else math.tan(v)


def load_config(path) -> FugSegConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path)


def dump_config(config: FugSegConfig) -> str:
    """Serialise ``config``; angles are written in radians so the round trip is exact."""
    s, g, lt = config.sensor, config.grid, config.labeling
    lines = [
        "[sensor]",
        f"sigma_r = {s.sigma_r!r}",
        f"sigma_phi_rad = {s.sigma_phi!r}",
        f"sigma_theta_rad = {s.sigma_theta!r}",
        f"h_s = {s.mount_height_hs!r}",
        f"t_h = {s.seed_height_th!r}",
        f"k_sigma = {s.k_sigma!r}",
        "",
        "[grid]",
        f"delta_alpha_rad = {g.delta_alpha!r}",
        f"m = {g.num_cells_m}",
        f"r0 = {g.r0!r}",
        f"r_max = {g.r_max!r}",
        f"radial_division = {g.radial_division}",
    ]
    if g.d0 is not None:
        lines.append(f"d0 = {g.d0!r}")
    if g.boundaries is not None:
        lines.append("boundaries = " + ", ".join(repr(b) for b in g.boundaries))
    lines += [
        "",
        "[thresholds]",
        f"t_delta_slope = {lt.t_delta_slope!r}",
        f"t_delta_r = {lt.t_delta_r!r}",
        f"t_z = {config.classify.t_z!r}",
        f"slope_mode = {lt.slope_mode}",
        f"cgp = {str(config.cgp).lower()}",
        f"cgp_wrap_azimuth = {str(config.cgp_wrap_azimuth).lower()}",
    ]
    if config.ego_box is not None:
        e = config.ego_box
        lines += ["", "[ego]"] + [f"{k} = {getattr(e, k)!r}" for k in ("x_min", "x_max", "y_min", "y_max", "z_min", "z_max")]
    return "\n".join(lines) + "\n"


def save_config(config: FugSegConfig, path) -> None:
    Path(path).write_text(dump_config(config))


# -- outputs -----------------------------------------------------------------


def _open_for_write(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def write_segmentation(result: SegmentationResult, scan, path, format: str = "csv") -> None:
    """Write per-point labels as CSV or as an ASCII PLY (green ground, red other)."""
    pts = scan.points if isinstance(scan, ScanRecord) else np.asarray(scan, dtype=np.float64)
    if len(pts) != len(result.ground):
        raise ValueError(f"result has {len(result.ground)} labels for {len(pts)} points")
    fmt = format.lower()
    if fmt == "csv":
        with _open_for_write(path) as fh:
            fh.write("index,x,y,z,label,elevation\n")
            for k, ((x, y, z), g, e) in enumerate(zip(pts.tolist(), result.ground.tolist(), result.elevation.tolist())):
                fh.write(f"{k},{x!r},{y!r},{z!r},{int(g)},{'' if e != e else repr(e)}\n")
    elif fmt == "ply":
        with _open_for_write(path) as fh:
            fh.write(
                "ply\nformat ascii 1.0\n"
                f"element vertex {len(pts)}\n"
                "property float x\nproperty float y\nproperty float z\n"
                "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                "end_header\n"
            )
            for (x, y, z), g in zip(pts.tolist(), result.ground.tolist()):
                fh.write(f"{x:.6f} {y:.6f} {z:.6f} {'0 255 0' if g else '255 0 0'}\n")
    else:
        raise ValueError(f"unknown output format {format!r}; use 'csv' or 'ply'")


def export_elevation_map(nodes: NodeHeightMap, path) -> None:
    """CSV of every node: ``i,j,node_x,node_y,height`` (``undefined`` if unset)."""
    H = nodes.heights
    xy = nodes.node_xy
    with _open_for_write(path) as fh:
        fh.write("i,j,node_x,node_y,height\n")
        L, M1 = H.shape
        for i in range(L):
            for j in range(M1):
                h = H[i, j]
                hs = "undefined" if np.isnan(h) else repr(float(h))
                fh.write(f"{i},{j},{float(xy[i, j, 0])!r},{float(xy[i, j, 1])!r},{hs}\n")


def scan_pairs(scan_dir, label_dir=None):
    """Sorted (scan_path, label_path_or_None) pairs for ``*.bin`` files in a directory."""
    scan_dir = Path(scan_dir)
    if not scan_dir.is_dir():
        raise FileNotFoundError(f"scan directory {scan_dir} does not exist")
    out = []
    for p in sorted(scan_dir.glob("*.bin")):
        lp = None
        if label_dir is not None:
            lp = Path(label_dir) / (p.stem + ".label")
            if not lp.exists():
                raise FileNotFoundError(f"missing label file {lp}")
        out.append((p, lp))
    return out


def default_config_path(name: str = "hdl64e") -> str:
    return os.fspath(DATA_DIR / f"{name}.cfg")
