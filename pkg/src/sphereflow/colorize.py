"""Flow visualization: Middlebury color coding and the RGBA sphere encoding."""

from __future__ import annotations

import numpy as np

from .geom import pixel_to_latlon, unitvec_from_latlon
from .rasters import FlowField, pixel_center_grid

_EPS = 1e-12


def make_color_wheel() -> np.ndarray:
    """The 55-color Middlebury wheel, rows RGB in [0, 255]."""
    ry, yg, gc, cb, bm, mr = 15, 6, 4, 11, 13, 6
    wheel = np.zeros((ry + yg + gc + cb + bm + mr, 3))
    col = 0
    wheel[col:col + ry, 0] = 255
    wheel[col:col + ry, 1] = np.floor(255 * np.arange(ry) / ry)
    col += ry
    wheel[col:col + yg, 0] = 255 - np.floor(255 * np.arange(yg) / yg)
    wheel[col:col + yg, 1] = 255
    col += yg
    wheel[col:col + gc, 1] = 255
    wheel[col:col + gc, 2] = np.floor(255 * np.arange(gc) / gc)
    col += gc
    wheel[col:col + cb, 1] = 255 - np.floor(255 * np.arange(cb) / cb)
    wheel[col:col + cb, 2] = 255
    col += cb
    wheel[col:col + bm, 2] = 255
    wheel[col:col + bm, 0] = np.floor(255 * np.arange(bm) / bm)
    col += bm
    wheel[col:col + mr, 2] = 255 - np.floor(255 * np.arange(mr) / mr)
    wheel[col:col + mr, 0] = 255
    return wheel


def _wheel_rgb(u, v):
    """Color the normalized plane vectors (u, v); |(u, v)| = 1 is full
    saturation, beyond that colors darken to flag saturation overflow."""
    wheel = make_color_wheel()
    n = wheel.shape[0]
    rad = np.hypot(u, v)
    a = np.arctan2(-v, -u) / np.pi
    fk = (a + 1.0) / 2.0 * (n - 1)
    k0 = np.floor(fk).astype(np.int64)
    k1 = (k0 + 1) % n
    f = (fk - k0)[..., None]
    col = (1.0 - f) * wheel[k0] / 255.0 + f * wheel[k1] / 255.0
    inside = (rad <= 1.0)[..., None]
    r = rad[..., None]
    col = np.where(inside, 1.0 - r * (1.0 - col), col * 0.75)
    return np.floor(255.0 * col).astype(np.uint8)


def _as_flow_array(f):
    return f.data if isinstance(f, FlowField) else np.asarray(f, dtype=np.float64)


def flow_to_color(f, clip=None) -> np.ndarray:
    """Middlebury color image, (H, W, 3) uint8.

    With ``clip`` set, magnitudes are normalized by it and anything larger
    saturates; otherwise the field's own maximum magnitude is the scale.
    Zero flow renders white.
    """
    data = np.asarray(_as_flow_array(f), dtype=np.float64)
    u, v = data[..., 0], data[..., 1]
    if clip is not None:
        scale = float(clip)
    else:
        scale = float(np.max(np.hypot(u, v)))
    scale = max(scale, _EPS)
    return _wheel_rgb(u / scale, v / scale)


def sphere_flow_to_rgba(f, clip=None) -> np.ndarray:
    """RGBA encoding of flow as 3D motion on the unit sphere, (H, W, 4) uint8.

    Endpoints are lifted to unit vectors; the motion vector M = end - start
    gives RGB from (Mx, My) via the color wheel and alpha affine in Mz
    (alpha 0.5 at Mz = 0). ``clip`` caps the planar magnitude used for
    normalization, as in :func:`flow_to_color`.
    """
    data = np.asarray(_as_flow_array(f), dtype=np.float64)
    h, w = data.shape[:2]
    rows, cols = pixel_center_grid(h, w)
    lat0, lon0 = pixel_to_latlon(rows, cols, h, w)
    # latitudes past a pole fold back across it under the lift, so the raw
    # endpoint row needs no explicit reflection
    lat1, lon1 = pixel_to_latlon(rows + data[..., 1], cols + data[..., 0], h, w)
    x0, y0, z0 = unitvec_from_latlon(lat0, lon0)
    x1, y1, z1 = unitvec_from_latlon(lat1, lon1)
    mx, my, mz = x1 - x0, y1 - y0, z1 - z0
    if clip is not None:
        scale = float(clip)
    else:
        scale = float(np.max(np.hypot(mx, my)))
    scale = max(scale, _EPS)
    rgb = _wheel_rgb(mx / scale, my / scale)
    alpha = np.clip((mz + 1.0) / 2.0, 0.0, 1.0)
    out = np.empty((h, w, 4), dtype=np.uint8)
    out[..., :3] = rgb
    out[..., 3] = np.round(alpha * 255.0).astype(np.uint8)
    return out
