"""Coordinate conversions, measurement-uncertainty propagation and slopes.

Spherical convention used throughout::

    x = R cos(phi) sin(theta)
    y = R cos(phi) cos(theta)
    z = R sin(phi)

so the azimuth is recovered with ``atan2(x, y)`` (note the argument order).
All angles are radians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DegeneratePointError, ZeroBaselineError


@dataclass(frozen=True)
class Point3:
    """A point in the sensor frame (meters, Z up).

    ``exact`` marks synthetic points (e.g. the leveled-ground origin) that
    carry no measurement noise.
    """

    x: float
    y: float
    z: float
    exact: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite coordinates {(self.x, self.y, self.z)}")

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class SphericalCoord:
    R: float
    phi: float
    theta: float

    def __post_init__(self):
        if self.R < 0:
            raise ValueError("radius must be non-negative")
        if abs(self.phi) > math.pi / 2 + 1e-12:
            raise ValueError("elevation must lie in [-pi/2, pi/2]")


@dataclass(frozen=True)
class SensorModel:
    """Per-sensor noise and mounting parameters.

    Angular sigmas are stored in radians. Use :meth:`from_degrees` for values
    quoted from datasheets.
    """

    sigma_r: float
    sigma_phi: float
    sigma_theta: float
    mount_height_hs: float
    seed_height_th: float
    k_sigma: float = 1.0

    def __post_init__(self):
        for name in ("sigma_r", "sigma_phi", "sigma_theta"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if not self.k_sigma > 0:
            raise ConfigError("k_sigma must be > 0")
        if not math.isfinite(self.mount_height_hs) or not math.isfinite(self.seed_height_th):
            raise ConfigError("mount height and seed threshold must be finite")

    @classmethod
    def from_degrees(cls, sigma_r, sigma_phi_deg, sigma_theta_deg, h_s, t_h, k_sigma=1.0):
        return cls(
            sigma_r=sigma_r,
            sigma_phi=math.radians(sigma_phi_deg),
            sigma_theta=math.radians(sigma_theta_deg),
            mount_height_hs=h_s,
            seed_height_th=t_h,
            k_sigma=k_sigma,
        )

    def with_k_sigma(self, k: float) -> "SensorModel":
        return replace(self, k_sigma=k)


# name: (sigma_r [m], sigma_phi [deg], sigma_theta [deg], H_s [m], T_h [m])
SENSOR_TABLE = {
    "hdl64e": (0.02, 0.033, 0.009, 1.73, -1.43),
    "hdl32e": (0.02, 0.033, 0.008, 1.84, -1.54),
    "ls128s2": (0.03, 0.020, 0.009, 1.35, -1.05),
    "cb64s1": (0.03, 0.063, 0.012, 1.4, -1.1),
    "falconk1": (0.02, 0.010, 0.010, 2.5, -2.2),
    "falconk3": (0.02, 0.010, 0.007, 2.6, -2.3),
    "rs-m1": (0.025, 0.010, 0.010, 0.8, -0.5),
    "ouster2": (0.02, 0.010, 0.010, 1.8, -1.5),
    "vlp32c": (0.03, 0.033, 0.010, 0.7, -0.4),
    "os1-128": (0.03, 0.010, 0.010, 0.5, -0.2),
}


def sensor_preset(name: str, k_sigma: float = 1.0) -> SensorModel:
    try:
        row = SENSOR_TABLE[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown sensor preset {name!r}; known: {sorted(SENSOR_TABLE)}") from None
    return SensorModel.from_degrees(*row, k_sigma=k_sigma)


@dataclass(frozen=True)
class PointSigma:
    sigma_x: float
    sigma_y: float
    sigma_z: float


@dataclass(frozen=True)
class PairSigma:
    sigma_dz: float
    sigma_dr: float


def spherical_from_cartesian(p: Point3) -> SphericalCoord:
    R = p.norm
    if R == 0.0:
        raise DegeneratePointError("degenerate point at origin")
    # atan2 keeps the horizontal component accurate near the vertical
    phi = math.atan2(p.z, math.hypot(p.x, p.y))
    return SphericalCoord(R=R, phi=phi, theta=math.atan2(p.x, p.y))


def cartesian_from_spherical(s: SphericalCoord) -> Point3:
    c = math.cos(s.phi)
    return Point3(s.R * c * math.sin(s.theta), s.R * c * math.cos(s.theta), s.R * math.sin(s.phi))


def point_sigma(p: Point3, sensor: SensorModel) -> PointSigma:
    """Standard deviations of (x, y, z) from uncorrelated (R, phi, theta) noise."""
    if p.exact:
        return PointSigma(0.0, 0.0, 0.0)
    s = spherical_from_cartesian(p)
    sx, sy, sz = _sigma_xyz(s.R, s.phi, s.theta, sensor)
    return PointSigma(float(sx), float(sy), float(sz))


def _sigma_xyz(R, phi, theta, sensor: SensorModel):
    """Vectorised first-order propagation; works on floats or ndarrays."""
    sr2 = sensor.sigma_r**2
    sp2 = sensor.sigma_phi**2
    st2 = sensor.sigma_theta**2
    cp, sp = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    R2 = R * R
    var_x = cp**2 * st**2 * sr2 + R2 * sp**2 * st**2 * sp2 + R2 * cp**2 * ct**2 * st2
    var_y = cp**2 * ct**2 * sr2 + R2 * sp**2 * ct**2 * sp2 + R2 * cp**2 * st**2 * st2
    var_z = sp**2 * sr2 + R2 * cp**2 * sp2
    k = sensor.k_sigma
    return k * np.sqrt(var_x), k * np.sqrt(var_y), k * np.sqrt(var_z)


def sigma_xyz_array(xyz: np.ndarray, sensor: SensorModel) -> np.ndarray:
    """Per-row (sigma_x, sigma_y, sigma_z) for an (N, 3) array.

    Rows containing NaN (empty cells) yield NaN.
    """
    xyz = np.asarray(xyz, dtype=np.float64)
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    R = np.sqrt(x * x + y * y + z * z)
    phi = np.arctan2(z, np.hypot(x, y))
    theta = np.arctan2(x, y)
    return np.stack(_sigma_xyz(R, phi, theta, sensor), axis=1)


def _xy_baseline(pk: Point3, pl: Point3):
    dx = pl.x - pk.x
    dy = pl.y - pk.y
    dr = math.sqrt(dx * dx + dy * dy)
    if dr == 0.0:
        raise ZeroBaselineError("zero baseline")
    return dx, dy, dr


def pair_sigma(pk: Point3, pl: Point3, sensor: SensorModel) -> PairSigma:
    """Standard deviations of the height difference and the XY baseline."""
    dx, dy, dr = _xy_baseline(pk, pl)
    sk = point_sigma(pk, sensor)
    sl = point_sigma(pl, sensor)
    sigma_dz = math.sqrt(sl.sigma_z**2 + sk.sigma_z**2)
    sigma_dr = math.sqrt(
        (dx / dr) ** 2 * (sl.sigma_x**2 + sk.sigma_x**2)
        + (dy / dr) ** 2 * (sl.sigma_y**2 + sk.sigma_y**2)
    )
    return PairSigma(sigma_dz, sigma_dr)


def traditional_slope(pk: Point3, pl: Point3) -> float:
    _, _, dr = _xy_baseline(pk, pl)
    return (pl.z - pk.z) / dr


def adaptive_slope_from_terms(dz: float, dr: float, sigma_dz: float, sigma_dr: float) -> float:
    """Slope with an uncertainty dead zone on dz and an inflated baseline."""
    if abs(dz) <= sigma_dz:
        return 0.0
    if dz > 0:
        return (dz - sigma_dz) / (dr + sigma_dr)
    return (dz + sigma_dz) / (dr + sigma_dr)


def adaptive_slope(pk: Point3, pl: Point3, sensor: SensorModel) -> float:
    _, _, dr = _xy_baseline(pk, pl)
    ps = pair_sigma(pk, pl, sensor)
    return adaptive_slope_from_terms(pl.z - pk.z, dr, ps.sigma_dz, ps.sigma_dr)
