"""Raster containers for equirectangular frames and flow fields."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InputError

KINDS = ("frame", "flow", "scalar-map")

# BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class EquirectRaster:
    """Row-major raster, (H, W) or (H, W, C).

    Full 360-degree rasters have width = 2 * height; operations that assume
    the full field of view check :attr:`is_full_fov`.
    """

    data: np.ndarray
    kind: str = "frame"

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim not in (2, 3):
            raise DimensionMismatchError(f"raster must be 2D or 3D, got {self.data.shape}")
        if self.kind not in KINDS:
            raise InputError(f"unknown raster kind {self.kind!r}")

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[2]

    @property
    def is_full_fov(self) -> bool:
        return self.w == 2 * self.h

    def gray(self) -> np.ndarray:
        return to_gray(self.data)


def require_full_fov(r: EquirectRaster):
    if not r.is_full_fov:
        raise DimensionMismatchError(
            f"full 360-degree raster required (width = 2 x height), got {r.h}x{r.w}"
        )


@dataclass
class FlowField:
    """Per-pixel displacement in pixel units: u along +columns, v along +rows.

    ``data`` is (H, W, 2). Entries must be finite wherever ``valid_mask`` is
    set (everywhere when the mask is None).
    """

    data: np.ndarray
    valid_mask: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3 or self.data.shape[2] != 2:
            raise DimensionMismatchError(f"flow must be (H, W, 2), got {self.data.shape}")
        if self.valid_mask is not None:
            self.valid_mask = np.asarray(self.valid_mask, dtype=bool)
            if self.valid_mask.shape != self.data.shape[:2]:
                raise DimensionMismatchError(
                    f"mask shape {self.valid_mask.shape} does not match flow {self.data.shape[:2]}"
                )
        checked = self.data if self.valid_mask is None else self.data[self.valid_mask]
        if not np.isfinite(checked).all():
            raise InputError("flow contains non-finite values at valid pixels")

    @classmethod
    def from_uv(cls, u, v, valid_mask=None) -> "FlowField":
        return cls(np.stack([np.asarray(u), np.asarray(v)], axis=-1), valid_mask)

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def is_full_fov(self) -> bool:
        return self.w == 2 * self.h

    @property
    def u(self) -> np.ndarray:
        return self.data[..., 0]

    @property
    def v(self) -> np.ndarray:
        return self.data[..., 1]

    def speed(self) -> np.ndarray:
        return np.hypot(self.u, self.v)

    def wrap_shortest(self) -> "FlowField":
        """Reduce u modulo the width to the shortest signed displacement."""
        u = wrap_columns(self.u, self.w)
        return FlowField.from_uv(u, self.v.copy(), self.valid_mask)


def wrap_columns(du, w: int):
    """Map a column displacement to its wrap-shortest value in [-w/2, w/2)."""
    return (np.asarray(du) + w / 2.0) % w - w / 2.0


def to_gray(img) -> np.ndarray:
    """Collapse an (H, W[, C]) image to BT.601 luminance, float64."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 1:
        return img[..., 0]
    if img.ndim == 3 and img.shape[2] in (3, 4):
        return img[..., :3] @ _LUMA
    raise DimensionMismatchError(f"cannot convert shape {img.shape} to grayscale")


def pixel_center_grid(h: int, w: int):
    """Row/column index grids, float64, shape (h, w)."""
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64),
                             np.arange(w, dtype=np.float64), indexing="ij")
    return rows, cols
