"""File I/O: Middlebury .flo flow files and lossless image formats.

The .flo layout is fixed little-endian regardless of host: a float32 sentinel
202021.25 ("PIEH" as bytes), int32 width, int32 height, then row-major
interleaved (u, v) float32 pairs. A well-formed file is exactly
12 + 8*H*W bytes.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .errors import FloDimensionError, FloMagicError, FloTruncatedError, InputError
from .rasters import FlowField

FLO_MAGIC = 202021.25
# refuse absurd headers before trusting the payload size
_MAX_DIM = 100_000


def write_flo(path, flow):
    """Write a flow field (FlowField or (H, W, 2) array) as .flo.

    Data is stored as float32; wider inputs are cast.
    """
    data = np.asarray(flow.data if isinstance(flow, FlowField) else flow)
    if data.ndim != 3 or data.shape[2] != 2:
        raise InputError(f"flow must be (H, W, 2), got {data.shape}")
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        np.array([FLO_MAGIC], dtype="<f4").tofile(fh)
        np.array([w, h], dtype="<i4").tofile(fh)
        fh.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def read_flo(path) -> FlowField:
    """Read a .flo file; non-finite pixels become invalid-mask entries.

    Raises:
        FloMagicError: sentinel mismatch.
        FloDimensionError: nonpositive or absurd header dimensions.
        FloTruncatedError: payload shorter or longer than the header implies.
    """
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        header = fh.read(12)
        if len(header) < 12:
            raise FloTruncatedError(f"{path}: header truncated ({len(header)} bytes)")
        magic = np.frombuffer(header, dtype="<f4", count=1)[0]
        if magic != np.float32(FLO_MAGIC):
            raise FloMagicError(f"{path}: bad magic {magic!r}")
        w, h = (int(x) for x in np.frombuffer(header[4:], dtype="<i4", count=2))
        if w <= 0 or h <= 0 or w > _MAX_DIM or h > _MAX_DIM:
            raise FloDimensionError(f"{path}: bad dimensions {w}x{h}")
        expect = 8 * h * w
        if size - 12 != expect:
            raise FloTruncatedError(
                f"{path}: payload is {size - 12} bytes, expected {expect}"
            )
        data = np.frombuffer(fh.read(expect), dtype="<f4").reshape(h, w, 2)
    finite = np.isfinite(data).all(axis=2)
    mask = None if finite.all() else finite
    return FlowField(data.copy(), mask)


def save_image(path, img):
    """Write an image losslessly (format from the suffix: .png or .ppm).

    Float input is taken in [0, 1] and quantized; uint8 passes through.
    """
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        arr = np.clip(np.round(np.asarray(arr, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)


def load_image(path) -> np.ndarray:
    """Read an image to float64 in [0, 1]; grayscale (H, W), else (H, W, C)."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB", "RGBA"):
            im = im.convert("RGB")
        arr = np.asarray(im)
    return arr.astype(np.float64) / 255.0
