"""Spherical coordinate systems, projections and rotations.

Two angular conventions live side by side and are bridged by one function
pair (:func:`latlon_to_polar` / :func:`polar_to_latlon`):

* polar form ``(theta, phi)``: ``theta`` is measured from the +z axis,
  ``phi`` is the azimuth in the x-y plane.  The unit-sphere lift is
  ``(sin(theta)cos(phi), sin(theta)sin(phi), cos(theta))``.
* latitude/longitude ``(lat, lon)``: the raster convention.  Equirectangular
  rows run from ``lat = +pi/2`` (top) to ``-pi/2`` (bottom), columns from
  ``lon = -pi`` to ``+pi``, with pixel centers at half-integer offsets.

``theta = pi/2 - lat`` and ``phi = lon``.  Note the signed theta range
``(-pi/2, pi/2)`` sometimes quoted for the polar form only reaches the
``z >= 0`` hemisphere under the literal lift; the inverse lift therefore
reports ``theta`` in ``[0, pi]`` and SphereDir accepts both ranges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularPointError

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

_UNIT_NORM_TOL = 1e-12


def wrap_angle(a):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    return math.pi - (math.pi - a) % TWO_PI


@dataclass(frozen=True)
class SphereDir:
    """Direction on the unit sphere in polar form (theta from +z, azimuth phi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (-HALF_PI - 1e-12 <= self.theta <= math.pi + 1e-12):
            raise ValueError(f"theta {self.theta} outside [-pi/2, pi]")
        object.__setattr__(self, "phi", float(wrap_angle(self.phi)))
        object.__setattr__(self, "theta", float(self.theta))


@dataclass(frozen=True)
class UnitVec3:
    """Unit direction vector; squared norm must be 1 within 1e-12."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        sq = self.x * self.x + self.y * self.y + self.z * self.z
        if abs(sq - 1.0) > _UNIT_NORM_TOL:
            raise ValueError(f"not a unit vector: |v|^2 = {sq!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class CatadioptricPoint:
    """Point on the catadioptric plane (projection of the sphere from its pole)."""

    x: float
    y: float


@dataclass(frozen=True)
class RotationSpec:
    """Pitch/roll/yaw angles in radians, each wrapped to (-pi, pi].

    Pitch rotates about X, roll about Y, yaw about Z.
    """

    pitch: float = 0.0
    roll: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pitch", float(wrap_angle(self.pitch)))
        object.__setattr__(self, "roll", float(wrap_angle(self.roll)))
        object.__setattr__(self, "yaw", float(wrap_angle(self.yaw)))

    @property
    def is_identity(self) -> bool:
        return self.pitch == 0.0 and self.roll == 0.0 and self.yaw == 0.0


@dataclass(frozen=True)
class PixelCoord:
    """Continuous pixel position in an equirectangular raster."""

    row: float
    col: float

    def normalized(self, h: int, w: int) -> "PixelCoord":
        """Wrap the column modulo w (longitude is periodic), clamp the row."""
        return PixelCoord(min(max(self.row, 0.0), h - 1.0), self.col % w)


# ---------------------------------------------------------------------------
# array-friendly building blocks

def unitvec_from_polar(theta, phi):
    """Lift polar angles to Cartesian components (vectorized).

    Returns ``(sin(theta)cos(phi), sin(theta)sin(phi), cos(theta))``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    st = np.sin(theta)
    return st * np.cos(phi), st * np.sin(phi), np.cos(theta)


def polar_from_unitvec(x, y, z):
    """Inverse lift: theta = arccos(z) in [0, pi], phi = atan2(y, x).

    Computed as atan2(hypot(x, y), z) for uniform conditioning; phi is 0
    at the exact poles.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    r = np.hypot(x, y)
    theta = np.arctan2(r, z)
    phi = np.where(r == 0.0, 0.0, np.arctan2(y, x))
    return theta, phi


def latlon_to_polar(lat, lon):
    """Bridge raster latitude/longitude to the polar convention."""
    return HALF_PI - np.asarray(lat, dtype=np.float64), np.asarray(lon, dtype=np.float64)


def polar_to_latlon(theta, phi):
    return HALF_PI - np.asarray(theta, dtype=np.float64), np.asarray(phi, dtype=np.float64)


def unitvec_from_latlon(lat, lon):
    """Direction components for raster latitude/longitude."""
    theta, phi = latlon_to_polar(lat, lon)
    return unitvec_from_polar(theta, phi)


def latlon_from_unitvec(x, y, z):
    theta, phi = polar_from_unitvec(x, y, z)
    return HALF_PI - theta, phi


def pixel_to_latlon(row, col, h: int, w: int):
    """Pixel-center map: row/col (continuous) to latitude/longitude."""
    row = np.asarray(row, dtype=np.float64)
    col = np.asarray(col, dtype=np.float64)
    lon = (col + 0.5) / w * TWO_PI - math.pi
    lat = HALF_PI - (row + 0.5) / h * math.pi
    return lat, lon


def latlon_to_pixel(lat, lon, h: int, w: int):
    """Inverse pixel-center map; output is continuous and unwrapped."""
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    col = (lon + math.pi) / TWO_PI * w - 0.5
    row = (HALF_PI - lat) / math.pi * h - 0.5
    return row, col


# ---------------------------------------------------------------------------
# scalar API over the domain types

def angular_to_unitvec(d: SphereDir) -> UnitVec3:
    """Lift a direction to the unit sphere."""
    x, y, z = unitvec_from_polar(d.theta, d.phi)
    return UnitVec3(float(x), float(y), float(z))


def unitvec_to_angular(v: UnitVec3) -> SphereDir:
    """Recover polar angles; theta lands in [0, pi], phi = 0 at poles."""
    theta, phi = polar_from_unitvec(v.x, v.y, v.z)
    return SphereDir(float(theta), float(phi))


def sphere_to_catadioptric(v: UnitVec3) -> CatadioptricPoint:
    """Project the unit sphere onto the plane from its pole.

    Returns ``(x/(1-z), y/(1-z))``, which equals
    ``(cot(theta/2)cos(phi), cot(theta/2)sin(phi))`` in polar form.

    Raises:
        SingularPointError: at the projection pole z = 1.
    """
    denom = 1.0 - v.z
    if denom == 0.0:
        raise SingularPointError("projection undefined at z = 1")
    return CatadioptricPoint(v.x / denom, v.y / denom)


def pixel_to_angular(p: PixelCoord, h: int, w: int) -> SphereDir:
    """Map a pixel to a direction (normalizes the pixel first)."""
    q = p.normalized(h, w)
    lat, lon = pixel_to_latlon(q.row, q.col, h, w)
    theta, phi = latlon_to_polar(float(lat), float(lon))
    return SphereDir(float(theta), float(phi))


def angular_to_pixel(d: SphereDir, h: int, w: int) -> PixelCoord:
    lat, lon = polar_to_latlon(d.theta, d.phi)
    row, col = latlon_to_pixel(float(lat), float(wrap_angle(lon)), h, w)
    return PixelCoord(float(row), float(col)).normalized(h, w)


# ---------------------------------------------------------------------------
# rotations

def rotation_about_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_about_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_about_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_spec(r: RotationSpec) -> np.ndarray:
    """3x3 rotation matrix for a pitch/roll/yaw triple.

    Composition order is fixed: yaw (Z) o pitch (X) o roll (Y).
    """
    return rotation_about_z(r.yaw) @ rotation_about_x(r.pitch) @ rotation_about_y(r.roll)


def is_rotation_matrix(m: np.ndarray, tol: float = 1e-12) -> bool:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        return False
    if not np.allclose(m.T @ m, np.eye(3), atol=tol, rtol=0.0):
        return False
    return abs(np.linalg.det(m) - 1.0) <= tol
