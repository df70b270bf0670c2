"""Synthetic 360-degree fixtures with analytic rotational ground truth.

Textures are functions of direction on the sphere, so a rotated render and a
resampled render agree up to interpolation error, and pure camera rotation
has exact per-pixel ground-truth flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .geom import (
    RotationSpec,
    latlon_from_unitvec,
    latlon_to_pixel,
    pixel_to_latlon,
    rotation_from_spec,
    unitvec_from_latlon,
)
from .rasters import EquirectRaster, FlowField, pixel_center_grid, wrap_columns
from .remap import rotate_frame

TEXTURES = ("checker", "bandnoise", "gradient")


@dataclass(frozen=True)
class SyntheticScene:
    """Deterministic scene: texture id, seed and equirect height (width 2h)."""

    texture: str = "bandnoise"
    seed: int = 0
    h: int = 256

    def __post_init__(self):
        if self.texture not in TEXTURES:
            raise InputError(f"unknown texture {self.texture!r}, have {TEXTURES}")
        if self.h < 2:
            raise InputError("height must be at least 2")

    @property
    def w(self) -> int:
        return 2 * self.h


def _bandnoise_params(seed: int, components: int = 24, max_freq: float = 40.0):
    """Random directional cosine waves; angular frequency capped so the
    texture stays comfortably below the raster Nyquist rate."""
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(components, 3))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    freqs = rng.uniform(4.0, max_freq, size=components)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=components)
    amps = rng.uniform(0.5, 1.0, size=components)
    amps *= 0.5 / np.sum(amps)
    return vecs, freqs, phases, amps


def texture_fn(scene: SyntheticScene):
    """The scene's texture as a vectorized function of (lat, lon) -> [0, 1]."""
    if scene.texture == "gradient":
        def fn(lat, lon):
            lat = np.asarray(lat, dtype=np.float64)
            lon = np.asarray(lon, dtype=np.float64)
            return 0.5 + 0.25 * np.sin(lat) + 0.25 * np.sin(lon)
        return fn

    if scene.texture == "checker":
        cells = 12  # angular cells per half-turn
        def fn(lat, lon):
            a = np.floor(np.asarray(lat) / math.pi * cells)
            b = np.floor(np.asarray(lon) / math.pi * cells)
            return ((a + b) % 2 + 0.1) / 1.2
        return fn

    vecs, freqs, phases, amps = _bandnoise_params(scene.seed)

    def fn(lat, lon):
        x, y, z = unitvec_from_latlon(lat, lon)
        out = np.full(np.shape(x), 0.5, dtype=np.float64)
        for k in range(len(freqs)):
            proj = vecs[k, 0] * x + vecs[k, 1] * y + vecs[k, 2] * z
            out += amps[k] * np.cos(freqs[k] * proj + phases[k])
        return out

    return fn


def render_frame(scene: SyntheticScene) -> EquirectRaster:
    """Evaluate the texture at the pixel centers."""
    rows, cols = pixel_center_grid(scene.h, scene.w)
    lat, lon = pixel_to_latlon(rows, cols, scene.h, scene.w)
    return EquirectRaster(texture_fn(scene)(lat, lon))


def render_pair(scene: SyntheticScene, r: RotationSpec):
    """A frame and its rotated successor (frame2 = rotate_frame(frame1, r))."""
    frame1 = render_frame(scene)
    return frame1, rotate_frame(frame1, r)


def rotation_flow_from_matrix(h: int, w: int, rot: np.ndarray) -> FlowField:
    """Exact flow of a pure camera rotation given as a matrix."""
    rows, cols = pixel_center_grid(h, w)
    lat, lon = pixel_to_latlon(rows, cols, h, w)
    x, y, z = unitvec_from_latlon(lat, lon)
    rot = np.asarray(rot, dtype=np.float64)
    xe = rot[0, 0] * x + rot[0, 1] * y + rot[0, 2] * z
    ye = rot[1, 0] * x + rot[1, 1] * y + rot[1, 2] * z
    ze = rot[2, 0] * x + rot[2, 1] * y + rot[2, 2] * z
    lat_e, lon_e = latlon_from_unitvec(xe, ye, ze)
    end_rows, end_cols = latlon_to_pixel(lat_e, lon_e, h, w)
    return FlowField.from_uv(wrap_columns(end_cols - cols, w), end_rows - rows)


def rotation_flow_gt(h: int, w: int, r: RotationSpec) -> FlowField:
    """Ground-truth flow for a pure rotation: flow(q) = pix(R sphere(q)) - q,
    wrap-shortest in the column component."""
    if r.is_identity:
        return FlowField(np.zeros((h, w, 2)))
    return rotation_flow_from_matrix(h, w, rotation_from_spec(r))


def psnr(a, b, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB (infinite for identical inputs)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)
