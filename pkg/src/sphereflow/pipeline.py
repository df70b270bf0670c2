"""Six-patch 360-degree flow estimation.

A full-FOV equirect frame pair is resampled onto the six cube-face tangent
planes (with a field-of-view margin so neighboring patches overlap), a 2D
flow backend runs on each patch pair, the per-patch flows are transported
back into equirect pixel units, and the transported fields are blended with
a cosine partition of unity over the overlap.

Transport converts a patch-pixel displacement to plane units and applies the
local Jacobian of the plane -> equirect map, evaluated by central
differences at each covered pixel; the "endpoint" mode instead projects the
displaced patch position through the inverse chart and takes the wrapped
pixel difference. The two agree to first order in the displacement.

The built-in backend is the classical coarse-to-fine solver in
``variational``. External estimators plug in either as a callable
``(patch1, patch2) -> FlowField`` or as a ``CommandBackend`` subprocess
contract (two image paths in, one .flo path out).
"""

from __future__ import annotations

import math
import os
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BackendError,
    ConfigError,
    DimensionMismatchError,
    InputError,
    NumericError,
)
from .flowio import read_flo, save_image
from .geom import latlon_to_pixel, pixel_to_latlon
from .kernels import bilinear_sample
from .rasters import EquirectRaster, FlowField, pixel_center_grid, wrap_columns
from .tangent import (
    TangentSpec,
    gnomonic_forward_raw,
    gnomonic_inverse,
    patch_support_and_weight,
    sample_patches,
)
from .variational import builtin_variational_backend

# fov/2 must exceed the cube-corner distance arctan(sqrt 2), or the cosine
# blend cutoff leaves uncovered pixels around the eight corners
DEFAULT_FOV = math.pi / 2 + 0.45

TRANSPORT_MODES = ("jacobian", "endpoint")


@dataclass
class PipelineConfig:
    """Settings for estimate_pano_flow.

    ``patch_size`` defaults to the frame height; ``input_size`` (h, w), when
    set, resizes patches to the backend's working resolution and rescales
    the returned flow back. ``backend`` is "builtin" or any callable taking
    two patch rasters and returning flow; callables are run concurrently
    across patches when ``threads`` > 1 unless they set a ``reentrant =
    False`` attribute.
    """

    n_patches: int = 6
    fov: float = DEFAULT_FOV
    patch_size: int | None = None
    input_size: tuple[int, int] | None = None
    backend: object = "builtin"
    backend_params: dict = field(default_factory=dict)
    transport: str = "jacobian"
    threads: int = 1

    def __post_init__(self):
        if self.transport not in TRANSPORT_MODES:
            raise ConfigError(
                f"transport must be one of {TRANSPORT_MODES}, got {self.transport!r}")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.input_size is not None:
            hi, wi = self.input_size
            if hi < 8 or wi < 8:
                raise ConfigError(f"input_size too small: {self.input_size}")


class CommandBackend:
    """Per-patch flow estimation through an external command.

    ``command`` is an argv list; the literal placeholders {in1}, {in2} and
    {out} are replaced with two PNG paths and the expected .flo output path,
    e.g. ["my-flow", "{in1}", "{in2}", "-o", "{out}"]. The command must exit
    zero and write the .flo file. Subprocesses are serialized by the
    pipeline (reentrant = False).
    """

    reentrant = False

    def __init__(self, command, timeout: float | None = None):
        self.command = list(command)
        self.timeout = timeout
        joined = " ".join(self.command)
        for ph in ("{in1}", "{in2}", "{out}"):
            if ph not in joined:
                raise ConfigError(f"command template is missing {ph}")

    def __call__(self, p1, p2) -> FlowField:
        with tempfile.TemporaryDirectory(prefix="sphereflow-") as td:
            in1 = os.path.join(td, "patch1.png")
            in2 = os.path.join(td, "patch2.png")
            out = os.path.join(td, "flow.flo")
            save_image(in1, p1)
            save_image(in2, p2)
            argv = [
                a.replace("{in1}", in1).replace("{in2}", in2).replace("{out}", out)
                for a in self.command
            ]
            proc = subprocess.run(argv, capture_output=True, timeout=self.timeout)
            if proc.returncode != 0:
                tail = proc.stderr.decode(errors="replace").strip()[-200:]
                raise NumericError(
                    f"backend command exited {proc.returncode}: {tail}")
            if not os.path.exists(out):
                raise NumericError("backend command wrote no output file")
            return read_flo(out)


def resize_image(img, shape):
    """Bilinear resize of an (H, W[, C]) raster to ``shape`` = (h, w)."""
    data = np.asarray(img, dtype=np.float64)
    hd, wd = shape
    hs, ws = data.shape[:2]
    rows = (np.arange(hd, dtype=np.float64)[:, None] + 0.5) * hs / hd - 0.5
    cols = (np.arange(wd, dtype=np.float64)[None, :] + 0.5) * ws / wd - 0.5
    rows = rows + np.zeros((1, wd))
    cols = cols + np.zeros((hd, 1))
    if data.ndim == 2:
        return bilinear_sample(data, rows, cols, mode="edge")
    out = np.empty((hd, wd, data.shape[2]))
    for c in range(data.shape[2]):
        out[..., c] = bilinear_sample(data[..., c], rows, cols, mode="edge")
    return out


def resize_flow(flow, shape) -> FlowField:
    """Bilinear flow resize with vectors rescaled to the new pixel units."""
    data = flow.data if isinstance(flow, FlowField) else np.asarray(flow)
    hd, wd = shape
    hs, ws = data.shape[:2]
    resized = resize_image(data, shape)
    resized[..., 0] *= wd / ws
    resized[..., 1] *= hd / hs
    return FlowField(resized)


def _plane_to_equirect_pixel(x, y, spec: TangentSpec, h: int, w: int):
    lam, psi = gnomonic_inverse(x, y, spec)
    return latlon_to_pixel(lat=psi, lon=lam, h=h, w=w)


def transport_patch_flow(patch_flow, spec: TangentSpec, h: int, w: int,
                         mode: str = "jacobian"):
    """Transport a patch-pixel flow field to equirect pixel units.

    Returns the transported (h, w, 2) field, zero off the patch support, and
    the per-pixel blend weight of this patch (unnormalized).
    """
    data = patch_flow.data if isinstance(patch_flow, FlowField) \
        else np.asarray(patch_flow, dtype=np.float64)
    if data.shape != (spec.patch_h, spec.patch_w, 2):
        raise DimensionMismatchError(
            f"patch flow shape {data.shape} does not match spec "
            f"{spec.patch_h}x{spec.patch_w}")
    if mode not in TRANSPORT_MODES:
        raise ConfigError(f"transport must be one of {TRANSPORT_MODES}, got {mode!r}")

    prow, pcol, support, weight = patch_support_and_weight(spec, h, w)
    weight = np.where(support, weight, 0.0)
    safe_r = np.where(support, prow, 0.0)
    safe_c = np.where(support, pcol, 0.0)
    fu = bilinear_sample(np.ascontiguousarray(data[..., 0]), safe_r, safe_c, mode="edge")
    fv = bilinear_sample(np.ascontiguousarray(data[..., 1]), safe_r, safe_c, mode="edge")

    # patch pixel steps in plane units; rows grow southward, plane y north
    sx = 2.0 * spec.half_extent / spec.patch_w
    sy = 2.0 * spec.half_extent / spec.patch_h
    dx = fu * sx
    dy = -fv * sy

    rows, cols = pixel_center_grid(h, w)
    lat, lon = pixel_to_latlon(rows, cols, h, w)
    x, y, _ = gnomonic_forward_raw(lon, lat, spec)
    x = np.where(support, x, 0.0)
    y = np.where(support, y, 0.0)

    if mode == "endpoint":
        end_r, end_c = _plane_to_equirect_pixel(x + dx, y + dy, spec, h, w)
        u = wrap_columns(end_c - cols, w)
        v = end_r - rows
    else:
        hx = 0.5 * sx
        hy = 0.5 * sy
        rpx, cpx = _plane_to_equirect_pixel(x + hx, y, spec, h, w)
        rmx, cmx = _plane_to_equirect_pixel(x - hx, y, spec, h, w)
        rpy, cpy = _plane_to_equirect_pixel(x, y + hy, spec, h, w)
        rmy, cmy = _plane_to_equirect_pixel(x, y - hy, spec, h, w)
        dcol_dx = wrap_columns(cpx - cmx, w) / (2.0 * hx)
        drow_dx = (rpx - rmx) / (2.0 * hx)
        dcol_dy = wrap_columns(cpy - cmy, w) / (2.0 * hy)
        drow_dy = (rpy - rmy) / (2.0 * hy)
        u = dcol_dx * dx + dcol_dy * dy
        v = drow_dx * dx + drow_dy * dy

    out = np.zeros((h, w, 2))
    out[..., 0] = np.where(support, u, 0.0)
    out[..., 1] = np.where(support, v, 0.0)
    return out, weight


def _resolve_backend(cfg: PipelineConfig):
    if cfg.backend == "builtin":
        def run(p1, p2):
            return builtin_variational_backend(p1, p2, **cfg.backend_params)
        return run, True
    if callable(cfg.backend):
        backend = cfg.backend
        def run(p1, p2):
            return backend(p1, p2, **cfg.backend_params)
        return run, bool(getattr(backend, "reentrant", True))
    raise ConfigError(f"backend must be 'builtin' or a callable, got {cfg.backend!r}")


def _estimate_patch(run, r1, r2, input_size):
    native = r1.shape[:2]
    if input_size is not None and tuple(input_size) != native:
        a = resize_image(r1, input_size)
        b = resize_image(r2, input_size)
    else:
        a, b = r1, r2
    out = run(a, b)
    data = out.data if isinstance(out, FlowField) else np.asarray(out, dtype=np.float64)
    if data.shape != a.shape[:2] + (2,):
        raise InputError(
            f"backend returned shape {data.shape} for {a.shape[:2]} patches")
    if isinstance(out, FlowField) and out.valid_mask is not None \
            and not out.valid_mask.all():
        raise InputError("backend returned partially masked flow")
    if not np.all(np.isfinite(data)):
        raise InputError("backend returned non-finite flow values")
    flow = out if isinstance(out, FlowField) else FlowField(data)
    if data.shape[:2] != native:
        flow = resize_flow(flow, native)
    return flow


def estimate_pano_flow(f1, f2, cfg: PipelineConfig | None = None) -> FlowField:
    """Estimate 360-degree flow between two full-FOV equirect frames.

    Raises:
        DimensionMismatchError: frame dims differ or width != 2 * height.
        BackendError: a patch backend failed; carries the patch index.
        NumericError: blend coverage hole (fov too small for the layout).
    """
    cfg = cfg if cfg is not None else PipelineConfig()
    r1 = f1 if isinstance(f1, EquirectRaster) else EquirectRaster(np.asarray(f1))
    r2 = f2 if isinstance(f2, EquirectRaster) else EquirectRaster(np.asarray(f2))
    if r1.data.shape != r2.data.shape:
        raise DimensionMismatchError(
            f"frame dims differ: {r1.data.shape} vs {r2.data.shape}")
    if not r1.is_full_fov:
        raise DimensionMismatchError(
            f"expected full-FOV 2:1 frames, got {r1.h}x{r1.w}")

    patches1 = sample_patches(r1, cfg.n_patches, cfg.fov, cfg.patch_size)
    patches2 = sample_patches(r2, cfg.n_patches, cfg.fov, cfg.patch_size)
    run, reentrant = _resolve_backend(cfg)

    def job(i):
        try:
            return _estimate_patch(run, patches1[i].raster, patches2[i].raster,
                                   cfg.input_size)
        except Exception as exc:
            raise BackendError(i, str(exc)) from exc

    n = len(patches1)
    if cfg.threads > 1 and reentrant:
        with ThreadPoolExecutor(max_workers=min(cfg.threads, n)) as pool:
            flows = list(pool.map(job, range(n)))
    else:
        flows = [job(i) for i in range(n)]

    h, w = r1.h, r1.w
    num = np.zeros((h, w, 2))
    den = np.zeros((h, w))
    for i in range(n):
        part, wgt = transport_patch_flow(flows[i], patches1[i].spec, h, w,
                                         mode=cfg.transport)
        num += wgt[..., None] * part
        den += wgt
    holes = den <= 0.0
    if np.any(holes):
        raise NumericError(
            f"{int(holes.sum())} pixels receive no patch contribution; "
            "increase fov")
    return FlowField(num / den[..., None])
