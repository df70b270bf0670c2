"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled extension (built from ``_native.pyx``) is used when importable;
set ``SPHEREFLOW_NO_NATIVE=1`` to force the fallback. ``BACKEND`` names the
implementation in use. Both produce bit-identical results.
"""

import os

import numpy as np

from .. import errors
from . import _fallback

MODE_EDGE = _fallback.MODE_EDGE
MODE_SPHERE = _fallback.MODE_SPHERE

# the name must not exist before the from-import: a pre-bound module
# attribute would satisfy `from . import _native` without importing
if os.environ.get("SPHEREFLOW_NO_NATIVE", "") in ("1", "true"):
    _native = None
else:
    try:
        from . import _native  # type: ignore[attr-defined]
    except ImportError:
        _native = None

_impl = _native if _native is not None else _fallback
BACKEND = "native" if _native is not None else "fallback"

_MODES = {"edge": MODE_EDGE, "sphere": MODE_SPHERE}


def bilinear_sample(img, rows, cols, mode="sphere"):
    """Sample ``img`` (2D) bilinearly at fractional pixel positions.

    ``mode`` is "sphere" (columns wrap, rows reflect across the poles with a
    half-turn column shift) or "edge" (clamp to the border). Output has the
    shape of ``rows``.

    Raises:
        errors.DimensionMismatchError: rows/cols shapes differ or img not 2D.
    """
    if mode not in _MODES:
        raise ValueError(f"unknown sampling mode {mode!r}")
    img = np.ascontiguousarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise errors.DimensionMismatchError(f"expected 2D image, got shape {img.shape}")
    shape = np.shape(rows)
    r = np.ascontiguousarray(rows, dtype=np.float64).ravel()
    c = np.ascontiguousarray(cols, dtype=np.float64).ravel()
    if r.shape != c.shape:
        raise errors.DimensionMismatchError(
            f"row/col shapes differ: {np.shape(rows)} vs {np.shape(cols)}"
        )
    out = _impl.bilinear_sample_1d(img, r, c, _MODES[mode])
    return np.asarray(out).reshape(shape)


def hs_sweep(u, v, ix, iy, it, alpha2, color):
    """One in-place red-black half-sweep of the variational flow update.

    All five field arguments must be float64, C-contiguous and of one shape;
    ``u`` and ``v`` are modified. ``color`` selects the checkerboard parity
    (0 or 1) and ``alpha2`` is the squared smoothness weight.
    """
    for name, a in (("u", u), ("v", v), ("ix", ix), ("iy", iy), ("it", it)):
        if not (isinstance(a, np.ndarray) and a.dtype == np.float64
                and a.flags.c_contiguous and a.shape == u.shape and a.ndim == 2):
            raise errors.DimensionMismatchError(
                f"{name} must be a C-contiguous float64 array of shape {u.shape}"
            )
    if color not in (0, 1):
        raise ValueError("color must be 0 or 1")
    _impl.hs_sweep(u, v, ix, iy, it, float(alpha2), color)


hs_energy = _fallback.hs_energy
