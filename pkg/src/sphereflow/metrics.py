"""Flow error metrics and their distortion-weighted variants.

EPE is the mean Euclidean distance between predicted and reference flow
vectors. AE lifts both to homogeneous 3-vectors (u, v, 1) and measures the
angle between them, which stays finite for zero flow. The distorted variants
divide each per-pixel error by (1 - d), where d is a distortion density
assembled from cube-face radial profiles: polar faces fall off from 1 at the
face center, equatorial faces grow from 0 toward the face corners, so the
oversampled pole regions of an equirect raster receive the largest weights.

The density is evaluated analytically per output pixel (dominant-axis cube
assignment, then the radial profile of that face), which is the limit of
resampling an arbitrarily fine per-face meshgrid and keeps the map exactly
left-right and top-bottom symmetric.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatchError,
    InputError,
    InvalidDensityError,
)
from .geom import pixel_to_latlon, unitvec_from_latlon
from .rasters import FlowField, pixel_center_grid

# affine ranges the raw [0, 1] density is mapped into; the upper half makes
# the 1/(1-d) error weight span [2, inf), the lower half keeps it in [1, 2]
RANGE_PRESETS = {
    "upper-half": (0.5, 1.0),
    "lower-half": (0.0, 0.5),
}

SQRT2 = math.sqrt(2.0)

BIN_LABELS = ("s>=0", "s<5", "s<10", "s<20", "s>=20")


def cube_face_density(lat, lon):
    """Pre-mapping distortion density of sphere directions, in [0, 1].

    Directions are assigned to the cube face of their dominant axis. With
    (a, b) the in-face plane coordinates and r = hypot(a, b) <= sqrt(2):
    polar faces give 1 - r/sqrt(2), equatorial faces give r/sqrt(2).
    """
    x, y, z = unitvec_from_latlon(lat, lon)
    ax, ay, az = np.abs(x), np.abs(y), np.abs(z)
    polar = az >= np.maximum(ax, ay)
    x_face = ~polar & (ax >= ay)
    dom = np.where(polar, az, np.where(x_face, ax, ay))
    b = np.where(polar, x, np.where(x_face, y, x))
    c = np.where(polar, y, z)
    r = np.hypot(b, c) / dom
    return np.where(polar, 1.0 - r / SQRT2, r / SQRT2)


@dataclass
class DistortionMap:
    """Per-pixel density d with the affine range it was mapped into."""

    data: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise DimensionMismatchError("distortion map must be 2D")
        if not 0.0 <= self.lo < self.hi <= 1.0:
            raise ConfigError(f"bad density range [{self.lo}, {self.hi})")
        if self.data.size and (self.data.min() < self.lo
                               or self.data.max() >= self.hi):
            raise InputError("density values outside [lo, hi)")

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]


def build_distortion_map(h: int, w: int, drange="upper-half") -> DistortionMap:
    """Evaluate the cube-face density on the pixel grid and map it to [lo, hi).

    ``drange`` is a preset name or an explicit (lo, hi) pair with
    0 <= lo < hi <= 1.
    """
    if h < 1 or w < 1:
        raise InputError(f"bad raster dims {h}x{w}")
    if isinstance(drange, str):
        try:
            lo, hi = RANGE_PRESETS[drange]
        except KeyError:
            raise ConfigError(
                f"unknown range preset {drange!r}; "
                f"expected one of {sorted(RANGE_PRESETS)}") from None
    else:
        lo, hi = float(drange[0]), float(drange[1])
    rows, cols = pixel_center_grid(h, w)
    lat, lon = pixel_to_latlon(rows, cols, h, w)
    d = lo + (hi - lo) * cube_face_density(lat, lon)
    # the half-open upper end: density 1 is attainable at cube corners
    d = np.minimum(d, np.nextafter(hi, lo))
    return DistortionMap(d, lo, hi)


def _flow_and_mask(f):
    # float32 payloads (.flo files) are promoted so the accumulations run
    # at full precision no matter where the flow came from
    if isinstance(f, FlowField):
        return np.asarray(f.data, dtype=np.float64), f.valid_mask
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise DimensionMismatchError(f"flow must be (H, W, 2), got {arr.shape}")
    return arr, None


def _flow_pair(pred, gt):
    p, pm = _flow_and_mask(pred)
    g, gm = _flow_and_mask(gt)
    if p.shape != g.shape:
        raise DimensionMismatchError(
            f"flow shapes differ: {p.shape} vs {g.shape}")
    valid = np.ones(p.shape[:2], dtype=bool)
    if pm is not None:
        valid &= pm
    if gm is not None:
        valid &= gm
    if not valid.any():
        raise InputError("no valid pixels to evaluate")
    return p, g, valid


def _density_array(dmap, shape):
    d = dmap.data if isinstance(dmap, DistortionMap) else np.asarray(
        dmap, dtype=np.float64)
    if d.shape != shape:
        raise DimensionMismatchError(
            f"density shape {d.shape} does not match flow {shape}")
    if np.any(d >= 1.0):
        raise InvalidDensityError("density must stay below 1 everywhere")
    return d


def _epe_values(p, g):
    diff = p - g
    return np.sqrt(diff[..., 0] ** 2 + diff[..., 1] ** 2)


def _ae_values(p, g):
    # angle between the homogeneous lifts (u, v, 1) via atan2 of cross and
    # dot magnitudes; exact zero for identical vectors, unlike arccos of a
    # normalized dot product, and well conditioned for small angles
    pu, pv = p[..., 0], p[..., 1]
    gu, gv = g[..., 0], g[..., 1]
    cx = pv - gv
    cy = gu - pu
    cz = pu * gv - pv * gu
    cross = np.sqrt(cx * cx + cy * cy + cz * cz)
    dot = pu * gu + pv * gv + 1.0
    return np.arctan2(cross, dot)


def epe(pred, gt) -> float:
    """Mean endpoint error over valid pixels."""
    p, g, valid = _flow_pair(pred, gt)
    return float(np.sum(_epe_values(p, g)[valid]) / np.count_nonzero(valid))


def ae(pred, gt) -> float:
    """Mean angular error (homogeneous lift) over valid pixels, in radians."""
    p, g, valid = _flow_pair(pred, gt)
    return float(np.sum(_ae_values(p, g)[valid]) / np.count_nonzero(valid))


def epe_d(pred, gt, dmap) -> float:
    """Endpoint error with each pixel weighted by 1/(1 - d)."""
    p, g, valid = _flow_pair(pred, gt)
    d = _density_array(dmap, p.shape[:2])
    vals = _epe_values(p, g) / (1.0 - d)
    return float(np.sum(vals[valid]) / np.count_nonzero(valid))


def ae_d(pred, gt, dmap) -> float:
    """Angular error with each pixel weighted by 1/(1 - d)."""
    p, g, valid = _flow_pair(pred, gt)
    d = _density_array(dmap, p.shape[:2])
    vals = _ae_values(p, g) / (1.0 - d)
    return float(np.sum(vals[valid]) / np.count_nonzero(valid))


@dataclass
class MetricsReport:
    """Whole-raster metrics plus the speed-binned breakdown.

    ``bins`` maps a speed-region label to that region's metrics and pixel
    count; regions with no pixels are absent rather than zero. The regions
    are cumulative below 20 (s<10 contains s<5) plus the s>=20 tail.
    """

    epe: float
    ae: float
    epe_d: float
    ae_d: float
    bins: dict = field(default_factory=dict)

    def to_json(self, indent=None) -> str:
        doc = {"epe": self.epe, "ae": self.ae,
               "epe_d": self.epe_d, "ae_d": self.ae_d,
               "bins": self.bins}
        return json.dumps(doc, indent=indent)


def binned_report(pred, gt, dmap) -> MetricsReport:
    """Evaluate all four metrics overall and per ground-truth speed region."""
    p, g, valid = _flow_pair(pred, gt)
    d = _density_array(dmap, p.shape[:2])
    speed = np.hypot(g[..., 0], g[..., 1])
    epe_vals = _epe_values(p, g)
    ae_vals = _ae_values(p, g)
    inv = 1.0 / (1.0 - d)

    regions = {
        "s>=0": valid,
        "s<5": valid & (speed < 5.0),
        "s<10": valid & (speed < 10.0),
        "s<20": valid & (speed < 20.0),
        "s>=20": valid & (speed >= 20.0),
    }
    bins = {}
    for label in BIN_LABELS:
        sel = regions[label]
        n = int(np.count_nonzero(sel))
        if n == 0:
            continue
        bins[label] = {
            "epe": float(np.sum(epe_vals[sel]) / n),
            "ae": float(np.sum(ae_vals[sel]) / n),
            "epe_d": float(np.sum((epe_vals * inv)[sel]) / n),
            "ae_d": float(np.sum((ae_vals * inv)[sel]) / n),
            "count": n,
        }
    overall = bins["s>=0"]
    return MetricsReport(epe=overall["epe"], ae=overall["ae"],
                         epe_d=overall["epe_d"], ae_d=overall["ae_d"],
                         bins=bins)
