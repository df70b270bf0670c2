"""Classical coarse-to-fine brightness-constancy flow for tangent patches.

This is the built-in stand-in for a learned per-patch estimator: plain
Horn-Schunck energy (data residual squared plus alpha^2 times the flow
gradient energy), linearized once per pyramid level around the upsampled
flow and minimized by red-black block Gauss-Seidel sweeps. Float inputs in
[0, 1] are scaled to the 0..255 range before the solve; the default alpha
is tuned for that scale, and without the scaling the smoothness term would
drown the data term and the solver would need orders of magnitude more
sweeps to move the flow.

The solver state is the total flow, so the smoothness term always acts on
the full field rather than on per-level increments.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d, median_filter

from .errors import ConfigError, InputError
from .kernels import bilinear_sample, hs_energy, hs_sweep
from .rasters import FlowField, to_gray
from .remap import warp_backward

CONSTANT_PATCH_STD = 1e-10
# levels smaller than this carry almost no texture after the repeated
# smoothing and their flow estimates poison the finer levels
MIN_LEVEL_SIDE = 16

_SMOOTH = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def _solver_gray(p):
    arr = np.asarray(p)
    g = to_gray(arr)
    return g if arr.dtype == np.uint8 else g * 255.0


def _downsample2(img):
    # bandlimit before subsampling or coarse levels alias and mislead the solve
    s = correlate1d(img, _SMOOTH, axis=0, mode="nearest")
    s = correlate1d(s, _SMOOTH, axis=1, mode="nearest")
    return s[::2, ::2]


def _pyramid(img, levels):
    out = [img]
    while len(out) < levels and min(out[-1].shape) // 2 >= MIN_LEVEL_SIDE:
        out.append(_downsample2(out[-1]))
    return out


def _resample_flow(u, v, shape):
    """Bilinear flow resize with vector rescaling to the new pixel units."""
    hf, wf = shape
    hc, wc = u.shape
    rows = (np.arange(hf, dtype=np.float64)[:, None] + 0.5) * hc / hf - 0.5
    cols = (np.arange(wf, dtype=np.float64)[None, :] + 0.5) * wc / wf - 0.5
    rows = rows + np.zeros((1, wf))
    cols = cols + np.zeros((hf, 1))
    uf = bilinear_sample(u, rows, cols, mode="edge") * (wf / wc)
    vf = bilinear_sample(v, rows, cols, mode="edge") * (hf / hc)
    return uf, vf


def _solve_level(i1, i2, u, v, alpha2, iters, warps):
    """Alternate warping and red-black sweeps on one level.

    Returns one energy trace per warp stage; the energy is non-increasing
    within a stage (re-warping changes the linearization point, so traces
    from different stages are not comparable).
    """
    gy1, gx1 = np.gradient(i1)
    stages = []
    per_stage = max(1, iters // warps)
    for stage in range(warps):
        flow = np.stack([u, v], axis=-1)
        i2w = warp_backward(i2, flow, mode="edge")
        gy2, gx2 = np.gradient(i2w)
        ix = np.ascontiguousarray(0.5 * (gx1 + gx2))
        iy = np.ascontiguousarray(0.5 * (gy1 + gy2))
        it = np.ascontiguousarray(i2w - i1 - ix * u - iy * v)
        energies = np.empty(per_stage)
        for k in range(per_stage):
            hs_sweep(u, v, ix, iy, it, alpha2, 0)
            hs_sweep(u, v, ix, iy, it, alpha2, 1)
            energies[k] = hs_energy(u, v, ix, iy, it, alpha2)
        if stage < warps - 1:
            # low-texture pixels pick up large spurious values; purge them
            # before they steer the next linearization point
            u[:] = median_filter(u, size=3, mode="nearest")
            v[:] = median_filter(v, size=3, mode="nearest")
        stages.append(energies)
    return stages


def builtin_variational_backend(p1, p2, alpha: float = 10.0, iters: int = 200,
                                pyramid_levels: int = 4, warps: int = 3,
                                full_output: bool = False):
    """Estimate flow between two patches of identical dims.

    ``iters`` sweeps are spent per pyramid level, split over ``warps``
    relinearizations. Returns a FlowField; with ``full_output`` also a
    diagnostics dict carrying per-level, per-warp-stage solver energies
    (non-increasing within each stage) and a ``low_confidence`` flag set
    for degenerate (constant) inputs.
    """
    g1 = _solver_gray(p1)
    g2 = _solver_gray(p2)
    if g1.shape != g2.shape:
        raise InputError(f"patch dims differ: {g1.shape} vs {g2.shape}")
    if min(g1.shape) < 2:
        raise InputError("patch too small")
    if alpha <= 0 or iters < 1 or pyramid_levels < 1 or warps < 1:
        raise ConfigError("alpha, iters, pyramid_levels and warps must be positive")

    if g1.std() < CONSTANT_PATCH_STD and g2.std() < CONSTANT_PATCH_STD:
        flow = FlowField(np.zeros(g1.shape + (2,)))
        info = {"low_confidence": True, "energies": [], "levels": 0}
        return (flow, info) if full_output else flow

    pyr1 = _pyramid(np.ascontiguousarray(g1, dtype=np.float64), pyramid_levels)
    pyr2 = _pyramid(np.ascontiguousarray(g2, dtype=np.float64), pyramid_levels)
    alpha2 = float(alpha) ** 2

    u = np.zeros(pyr1[-1].shape)
    v = np.zeros(pyr1[-1].shape)
    energies = []
    for level in range(len(pyr1) - 1, -1, -1):
        i1, i2 = pyr1[level], pyr2[level]
        if u.shape != i1.shape:
            u, v = _resample_flow(u, v, i1.shape)
        u = np.ascontiguousarray(u)
        v = np.ascontiguousarray(v)
        energies.append(_solve_level(i1, i2, u, v, alpha2, iters, warps))
    energies.reverse()  # finest level first

    flow = FlowField(np.stack([u, v], axis=-1))
    info = {"low_confidence": False, "energies": energies,
            "levels": len(pyr1)}
    return (flow, info) if full_output else flow
