"""Synthetic LiDAR scenes with exact per-point ground truth.

Rays follow a spinning-sensor pattern (one ring per beam elevation) and are
intersected analytically with the terrain and with axis-aligned boxes.
Mirror patches replace a fraction of terrain returns by reflection points
that keep their XY position but sit ``depth`` below the surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..errors import FugSegError
from ..geometry import SensorModel, sensor_preset
from ..io import ScanRecord

KIND_GROUND, KIND_OBJECT, KIND_REFLECTION = 0, 1, 2
# SemanticKITTI ids used when a scene is written to disk.
CLASS_OF_KIND = {KIND_GROUND: 40, KIND_OBJECT: 10, KIND_REFLECTION: 99}

TERRAINS = ("flat", "inclined", "curved")


def hdl64e_elevations() -> tuple:
    """64 beam elevations in degrees: 1/3 deg spacing up top, 1/2 deg below."""
    upper = np.linspace(2.0, -8.33, 32)
    lower = np.linspace(-8.83, -24.33, 32)
    return tuple(float(v) for v in np.concatenate([upper, lower]))


@dataclass(frozen=True)
class Box:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float


@dataclass(frozen=True)
class MirrorPatch:
    """Region (XY radius and atan2(y, x) azimuth window, radians) whose
    terrain returns are replaced with probability ``fraction`` by points
    ``depth`` meters below the surface."""

    r_min: float
    r_max: float
    az_min: float
    az_max: float
    depth: float = 0.8
    fraction: float = 0.3


@dataclass(frozen=True)
class SceneSpec:
    terrain: str = "flat"
    sensor_height: float = 1.73
    slope_deg: float = 0.0
    uphill_azimuth: float = math.pi / 2  # atan2 direction of steepest ascent
    curvature: float = 0.0  # z = -H + curvature * r^2 / 2 for "curved"
    beam_elevations_deg: tuple = field(default_factory=hdl64e_elevations)
    azimuth_step_deg: float = 0.18
    max_range: float = 120.0
    boxes: tuple = ()
    mirror_patches: tuple = ()
    noise_sigma: float = 0.02
    seed: int = 0

    def validate(self):
        if self.terrain not in TERRAINS:
            raise FugSegError(f"terrain must be one of {TERRAINS}")
        if not self.sensor_height > 0:
            raise FugSegError("sensor_height must be > 0")
        if not 0 < self.azimuth_step_deg <= 45:
            raise FugSegError("azimuth_step_deg must be in (0, 45]")
        if not self.max_range > 0 or self.noise_sigma < 0:
            raise FugSegError("max_range must be > 0 and noise_sigma >= 0")
        if not self.beam_elevations_deg or any(abs(e) >= 90 for e in self.beam_elevations_deg):
            raise FugSegError("beam elevations must be non-empty and within (-90, 90) deg")
        if self.terrain == "inclined" and not abs(self.slope_deg) < 60:
            raise FugSegError("slope_deg must be within (-60, 60)")
        for b in self.boxes:
            if not (b.x_min < b.x_max and b.y_min < b.y_max and b.z_min < b.z_max):
                raise FugSegError(f"degenerate box {b}")
        for p in self.mirror_patches:
            if not (0 <= p.r_min < p.r_max and p.az_min < p.az_max and p.depth > 0 and 0 <= p.fraction <= 1):
                raise FugSegError(f"invalid mirror patch {p}")


@dataclass
class SyntheticScene:
    record: ScanRecord
    truth: np.ndarray  # (N,) bool, True = ground
    kind: np.ndarray  # (N,) int8 KIND_*
    spec: SceneSpec
    description: str = ""

    @property
    def points(self) -> np.ndarray:
        return self.record.points


def terrain_height(spec: SceneSpec, x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    H = spec.sensor_height
    if spec.terrain == "flat":
        return np.full(np.broadcast(x, y).shape, -H)
    if spec.terrain == "inclined":
        g = math.tan(math.radians(spec.slope_deg))
        return -H + g * (x * math.cos(spec.uphill_azimuth) + y * math.sin(spec.uphill_azimuth))
    return -H + 0.5 * spec.curvature * (x * x + y * y)


def box_on_ground(spec: SceneSpec, cx: float, cy: float, size_x: float, size_y: float, height: float) -> Box:
    """Box resting on the terrain (base at the lowest terrain height under its corners)."""
    xs = np.array([cx - size_x / 2, cx + size_x / 2])
    ys = np.array([cy - size_y / 2, cy + size_y / 2])
    base = float(terrain_height(spec, *np.meshgrid(xs, ys)).min())
    return Box(xs[0], xs[1], ys[0], ys[1], base, base + height)


def _ray_directions(spec: SceneSpec):
    elev = np.radians(np.asarray(spec.beam_elevations_deg, dtype=np.float64))
    n_az = int(round(360.0 / spec.azimuth_step_deg))
    theta = np.arange(n_az) * (2 * math.pi / n_az)
    phi, th = np.meshgrid(elev, theta, indexing="ij")
    phi, th = phi.ravel(), th.ravel()
    cp = np.cos(phi)
    d = np.stack([cp * np.sin(th), cp * np.cos(th), np.sin(phi)], axis=1)
    return d


def _ground_range(spec: SceneSpec, d: np.ndarray) -> np.ndarray:
    H = spec.sensor_height
    dz = d[:, 2]
    hxy = np.hypot(d[:, 0], d[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.terrain == "flat":
            R = np.where(dz < 0, -H / dz, np.inf)
        elif spec.terrain == "inclined":
            g = math.tan(math.radians(spec.slope_deg))
            along = d[:, 0] * math.cos(spec.uphill_azimuth) + d[:, 1] * math.sin(spec.uphill_azimuth)
            den = dz - g * along
            R = np.where(den < 0, -H / den, np.inf)
        else:
            # 0.5 k hxy^2 R^2 - dz R - H = 0, smallest positive root
            a = 0.5 * spec.curvature * hxy * hxy
            b = -dz
            c = -H
            disc = b * b - 4 * a * c
            ok = disc >= 0
            sq = np.sqrt(np.where(ok, disc, 0.0))
            q = -0.5 * (b + np.where(b >= 0, sq, -sq))
            r1 = np.where(a != 0, q / a, np.inf)
            r2 = np.where(q != 0, c / q, np.inf)
            r1 = np.where(r1 > 0, r1, np.inf)
            r2 = np.where(r2 > 0, r2, np.inf)
            R = np.where(ok, np.minimum(r1, r2), np.inf)
            flat = np.where(dz < 0, -H / dz, np.inf)
            R = np.where(a == 0, flat, R)
    return R


def _box_range(box: Box, d: np.ndarray) -> np.ndarray:
    lo = np.array([box.x_min, box.y_min, box.z_min])
    hi = np.array([box.x_max, box.y_max, box.z_max])
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = lo * inv
        t2 = hi * inv
    t1 = np.where(np.isnan(t1), -np.inf, t1)
    t2 = np.where(np.isnan(t2), np.inf, t2)
    tmin = np.minimum(t1, t2).max(axis=1)
    tmax = np.maximum(t1, t2).min(axis=1)
    hit = (tmax >= tmin) & (tmax > 0) & (tmin > 0)
    return np.where(hit, tmin, np.inf)


def synth_scene(spec: SceneSpec) -> SyntheticScene:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    d = _ray_directions(spec)
    R_ground = _ground_range(spec, d)
    R = R_ground.copy()
    kind = np.full(len(d), KIND_GROUND, dtype=np.int8)
    for box in spec.boxes:
        rb = _box_range(box, d)
        closer = rb < R
        R[closer] = rb[closer]
        kind[closer] = KIND_OBJECT
    keep = np.isfinite(R) & (R <= spec.max_range)
    d, R, kind = d[keep], R[keep], kind[keep]

    noisy_R = R + rng.normal(0.0, spec.noise_sigma, len(R)) if spec.noise_sigma > 0 else R
    pts = noisy_R[:, None] * d

    if spec.mirror_patches:
        true_xy = R[:, None] * d[:, :2]
        r_xy = np.hypot(true_xy[:, 0], true_xy[:, 1])
        az = np.arctan2(true_xy[:, 1], true_xy[:, 0])
        for patch in spec.mirror_patches:
            inside = (
                (kind == KIND_GROUND)
                & (r_xy >= patch.r_min) & (r_xy < patch.r_max)
                & (az >= patch.az_min) & (az < patch.az_max)
            )
            flip = inside & (rng.random(len(R)) < patch.fraction)
            surf = terrain_height(spec, pts[flip, 0], pts[flip, 1])
            jitter = rng.normal(0.0, spec.noise_sigma, int(flip.sum())) if spec.noise_sigma > 0 else 0.0
            pts[flip, 2] = surf - patch.depth + jitter
            kind[flip] = KIND_REFLECTION
        refl = kind == KIND_REFLECTION
        if refl.any():
            below = pts[refl, 2] < terrain_height(spec, pts[refl, 0], pts[refl, 1])
            if not below.all():
                raise FugSegError("generator self-check failed: reflection above the surface")

    classes = np.vectorize(CLASS_OF_KIND.get, otypes=[np.int64])(kind) if len(kind) else np.zeros(0, np.int64)
    record = ScanRecord(points=pts, intensity=None, labels=classes)
    desc = f"{spec.terrain} terrain, {len(spec.boxes)} box(es), {len(spec.mirror_patches)} mirror patch(es), noise {spec.noise_sigma} m"
    return SyntheticScene(record=record, truth=kind == KIND_GROUND, kind=kind, spec=spec, description=desc)


def scene_sensor(spec: SceneSpec, base: str = "hdl64e", margin: float = 0.3) -> SensorModel:
    """Sensor preset ``base`` re-mounted at the scene's height.

    The seed threshold keeps the preset's offset above the ground plane.
    """
    model = sensor_preset(base)
    return replace(model, mount_height_hs=spec.sensor_height, seed_height_th=-spec.sensor_height + margin)


def scene_preset(name: str, seed: int = 0, **overrides) -> SceneSpec:
    """Named scenes used by the acceptance suite and ``fugseg synth``."""
    name = name.lower()
    if name == "flat":
        spec = SceneSpec(terrain="flat", max_range=70.0, seed=seed)
    elif name == "inclined":
        spec = SceneSpec(terrain="inclined", slope_deg=6.0, max_range=70.0, seed=seed)
    elif name == "curved":
        spec = SceneSpec(terrain="curved", curvature=0.002, max_range=70.0, seed=seed)
    elif name == "occlusion":
        # A 3 m mount sees ground again ~20 m behind a 2 m box, past the
        # radial baseline limit, so only tangential propagation reaches it.
        base = SceneSpec(terrain="flat", sensor_height=3.0, max_range=70.0, seed=seed)
        spec = SceneSpec(**{**base.__dict__, "boxes": (box_on_ground(base, 0.0, 11.0, 16.0, 2.0, 2.0),)})
    elif name == "reflection":
        spec = SceneSpec(
            terrain="flat",
            max_range=70.0,
            seed=seed,
            mirror_patches=(MirrorPatch(28.0, 32.0, math.radians(60), math.radians(120), depth=0.8, fraction=0.3),),
        )
    else:
        raise FugSegError(f"unknown scene preset {name!r}")
    if overrides:
        spec = SceneSpec(**{**spec.__dict__, **overrides})
    return spec
