"""Gnomonic (tangential) projection, patch sampling and splatting.

The forward map takes longitude/latitude to plane coordinates on the plane
tangent at (lambda0, psi0):

    cos c = sin psi0 sin psi + cos psi0 cos psi cos(lambda - lambda0)
    x = cos psi sin(lambda - lambda0) / cos c
    y = (cos psi0 sin psi - sin psi0 cos psi cos(lambda - lambda0)) / cos c

with c the angular distance to the tangent point; it is defined on the open
hemisphere cos c > 0. The inverse used here is the algebraically reduced form
of the usual rho = sqrt(x^2 + y^2), c = arctan(rho) series:

    psi    = arcsin((sin psi0 + y cos psi0) / sqrt(1 + rho^2))
    lambda = lambda0 + atan2(x, cos psi0 - y sin psi0)

which returns (lambda0, psi0) exactly at rho = 0.

Patch rasters put +y (north) at row 0 and +x (increasing longitude at the
center) at growing columns; pixel centers span the plane square of
half-extent tan(fov/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindPlaneError, ConfigError, DimensionMismatchError
from .geom import latlon_to_pixel, pixel_to_latlon, wrap_angle
from .kernels import bilinear_sample
from .rasters import EquirectRaster, pixel_center_grid


@dataclass(frozen=True)
class TangentSpec:
    """Tangent-plane chart: center (lambda0, psi0), field of view, raster dims."""

    lambda0: float
    psi0: float
    fov: float
    patch_h: int
    patch_w: int

    def __post_init__(self):
        if not 0.0 < self.fov < math.pi:
            raise ConfigError(f"fov must be in (0, pi), got {self.fov}")
        if self.patch_h < 2 or self.patch_w < 2:
            raise ConfigError("patch dims must be at least 2")
        if not -math.pi / 2 <= self.psi0 <= math.pi / 2:
            raise ConfigError(f"psi0 must be a latitude, got {self.psi0}")

    @property
    def half_extent(self) -> float:
        """Half the side of the plane square covered by the raster."""
        return math.tan(self.fov / 2.0)


@dataclass
class TangentPatch:
    """A resampled tangent-plane raster plus the chart that produced it.

    Every gnomonic plane point has angular distance c < pi/2 from the chart
    center by construction (arctan of a finite radius), so no per-pixel
    validity mask is needed.
    """

    spec: TangentSpec
    raster: np.ndarray


def gnomonic_forward(lam, psi, spec: TangentSpec):
    """Project sphere angles onto the tangent plane.

    Raises:
        BehindPlaneError: any input at angular distance >= pi/2 from center.
    """
    x, y, cos_c = gnomonic_forward_raw(lam, psi, spec)
    if np.any(cos_c <= 0.0):
        raise BehindPlaneError("point(s) behind the tangent plane (cos c <= 0)")
    return x, y


def gnomonic_forward_raw(lam, psi, spec: TangentSpec):
    """Forward projection without the hemisphere check; also returns cos c.

    Where cos c <= 0 the plane coordinates are meaningless; callers mask them.
    """
    lam = np.asarray(lam, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    sin_psi0 = math.sin(spec.psi0)
    cos_psi0 = math.cos(spec.psi0)
    sin_psi = np.sin(psi)
    cos_psi = np.cos(psi)
    dlam = lam - spec.lambda0
    cos_dlam = np.cos(dlam)
    cos_c = sin_psi0 * sin_psi + cos_psi0 * cos_psi * cos_dlam
    denom = np.where(cos_c > 0.0, cos_c, 1.0)
    x = cos_psi * np.sin(dlam) / denom
    y = (cos_psi0 * sin_psi - sin_psi0 * cos_psi * cos_dlam) / denom
    return x, y, cos_c


def gnomonic_inverse(x, y, spec: TangentSpec):
    """Map plane coordinates back to (lambda, psi); (0, 0) -> chart center."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rho2 = x * x + y * y
    sin_psi0 = math.sin(spec.psi0)
    cos_psi0 = math.cos(spec.psi0)
    arg = (sin_psi0 + y * cos_psi0) / np.sqrt(1.0 + rho2)
    psi = np.arcsin(np.clip(arg, -1.0, 1.0))
    lam = wrap_angle(spec.lambda0 + np.arctan2(x, cos_psi0 - y * sin_psi0))
    # the origin must return the chart center exactly, not arcsin(sin(psi0))
    psi = np.where(rho2 == 0.0, spec.psi0, psi)
    return lam, psi


def patch_plane_grid(spec: TangentSpec):
    """Plane coordinates of every patch pixel center, shape (patch_h, patch_w)."""
    e = spec.half_extent
    xs = (np.arange(spec.patch_w, dtype=np.float64) + 0.5) / spec.patch_w * (2 * e) - e
    ys = e - (np.arange(spec.patch_h, dtype=np.float64) + 0.5) / spec.patch_h * (2 * e)
    return np.meshgrid(xs, ys, indexing="xy")


def plane_to_patch_pixel(x, y, spec: TangentSpec):
    """Continuous patch raster coordinates of plane points."""
    e = spec.half_extent
    col = (np.asarray(x) + e) * spec.patch_w / (2 * e) - 0.5
    row = (e - np.asarray(y)) * spec.patch_h / (2 * e) - 0.5
    return row, col


def cube_face_centers():
    """(lambda0, psi0) of the six cube-face tangent points: four equatorial
    at longitudes 0, pi/2, pi, -pi/2, then up and down."""
    return [
        (0.0, 0.0),
        (math.pi / 2, 0.0),
        (math.pi, 0.0),
        (-math.pi / 2, 0.0),
        (0.0, math.pi / 2),
        (0.0, -math.pi / 2),
    ]


def sample_patches(img, n: int = 6, fov: float = math.pi / 2,
                   patch_size: int | None = None) -> list[TangentPatch]:
    """Resample an equirect frame into n tangent patches (cube layout).

    ``patch_size`` is the square patch side in pixels; default is the frame
    height. Only the six-patch cube layout is supported.

    Raises:
        ConfigError: unsupported n.
    """
    if n != 6:
        raise ConfigError(f"unsupported patch layout n={n}; only n=6 (cube faces)")
    raster = img if isinstance(img, EquirectRaster) else EquirectRaster(np.asarray(img))
    h, w = raster.h, raster.w
    size = patch_size if patch_size is not None else h
    data = np.asarray(raster.data, dtype=np.float64)
    patches = []
    for lam0, psi0 in cube_face_centers():
        spec = TangentSpec(lam0, psi0, fov, size, size)
        px, py = patch_plane_grid(spec)
        lam, psi = gnomonic_inverse(px, py, spec)
        rows, cols = latlon_to_pixel(lat=psi, lon=lam, h=h, w=w)
        if data.ndim == 2:
            out = bilinear_sample(data, rows, cols, mode="sphere")
        else:
            out = np.empty((size, size, data.shape[2]))
            for ch in range(data.shape[2]):
                out[..., ch] = bilinear_sample(data[..., ch], rows, cols, mode="sphere")
        patches.append(TangentPatch(spec, out))
    return patches


def blend_weight(cos_c, fov: float):
    """Cosine falloff blend kernel: cos(c) inside the central cap c <= fov/2,
    zero outside (weight 1 at the tangent point, cos(fov/2) at the rim)."""
    cos_c = np.asarray(cos_c, dtype=np.float64)
    cutoff = math.cos(fov / 2.0)
    return np.where(cos_c >= cutoff, cos_c, 0.0)


def patch_support_and_weight(spec: TangentSpec, h: int, w: int):
    """Per equirect pixel: patch raster coords, square-support mask and the
    blend weight of this patch. Weight is nonzero only on the central cap."""
    rows, cols = pixel_center_grid(h, w)
    lat, lon = pixel_to_latlon(rows, cols, h, w)
    x, y, cos_c = gnomonic_forward_raw(lon, lat, spec)
    e = spec.half_extent
    support = (cos_c > 0.0) & (np.abs(x) <= e) & (np.abs(y) <= e)
    weight = blend_weight(cos_c, spec.fov)
    prow, pcol = plane_to_patch_pixel(x, y, spec)
    return prow, pcol, support, weight


def patch_to_equirect(patch: TangentPatch, h: int, w: int):
    """Paste a patch back onto the equirect grid.

    Every covered output pixel is projected onto the patch plane and sampled
    bilinearly (a gather; the hole-free equivalent of splatting the patch
    through the inverse map). Returns the pasted raster and the per-pixel
    blend weight, zero wherever the patch does not contribute.
    """
    data = np.asarray(patch.raster, dtype=np.float64)
    if data.shape[:2] != (patch.spec.patch_h, patch.spec.patch_w):
        raise DimensionMismatchError(
            f"raster shape {data.shape} does not match spec "
            f"{patch.spec.patch_h}x{patch.spec.patch_w}"
        )
    prow, pcol, support, weight = patch_support_and_weight(patch.spec, h, w)
    weight = np.where(support, weight, 0.0)
    shape = (h, w) if data.ndim == 2 else (h, w, data.shape[2])
    out = np.zeros(shape)
    safe_r = np.where(support, prow, 0.0)
    safe_c = np.where(support, pcol, 0.0)
    if data.ndim == 2:
        vals = bilinear_sample(data, safe_r, safe_c, mode="edge")
        out[support] = vals[support]
    else:
        for ch in range(data.shape[2]):
            vals = bilinear_sample(data[..., ch], safe_r, safe_c, mode="edge")
            out[..., ch][support] = vals[support]
    return EquirectRaster(out, raster_kind_for(data)), weight


def raster_kind_for(data: np.ndarray) -> str:
    return "flow" if data.ndim == 3 and data.shape[2] == 2 else (
        "frame" if data.ndim != 2 else "scalar-map")
