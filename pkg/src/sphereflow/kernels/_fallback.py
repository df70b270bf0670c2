"""Pure-numpy kernels, the reference implementation for the compiled twins.

The compiled module must produce bit-identical output, so every arithmetic
expression here fixes an evaluation order that the C side reproduces exactly
(and the extension is built with FMA contraction disabled).
"""

import numpy as np

_SNAP = 1e-9

MODE_EDGE = 0
MODE_SPHERE = 1


def _split(coord):
    """Integer base and fractional part, with fractions within 1e-9 of an
    integer snapped onto it so integer-valued inputs hit pixels exactly."""
    base = np.floor(coord)
    frac = coord - base
    bump = frac > 1.0 - _SNAP
    base = np.where(bump, base + 1.0, base)
    frac = np.where(bump | (frac < _SNAP), 0.0, frac)
    return base.astype(np.int64), frac


def _fetch_edge(img, r, c):
    h, w = img.shape
    return img[np.clip(r, 0, h - 1), np.clip(c, 0, w - 1)]


def _fetch_sphere(img, r, c):
    # Rows past a pole reflect back with a half-width column shift; columns
    # wrap. Only a single fold is handled (samples are never further out).
    h, w = img.shape
    neg = r < 0
    over = r > h - 1
    r = np.where(neg, -1 - r, r)
    r = np.where(over, 2 * h - 1 - r, r)
    r = np.clip(r, 0, h - 1)
    shift = np.where(neg | over, w // 2, 0)
    return img[r, (c + shift) % w]


def bilinear_sample_1d(img, rows, cols, mode):
    """Bilinear interpolation of ``img`` at fractional (row, col) positions.

    mode 0 clamps to the border, mode 1 applies spherical wrap (columns
    periodic, rows reflecting across the poles with a half-turn).
    """
    r0, fy = _split(rows)
    c0, fx = _split(cols)
    r1 = r0 + 1
    c1 = c0 + 1
    fetch = _fetch_sphere if mode == MODE_SPHERE else _fetch_edge
    v00 = fetch(img, r0, c0)
    v01 = fetch(img, r0, c1)
    v10 = fetch(img, r1, c0)
    v11 = fetch(img, r1, c1)
    top = (1.0 - fx) * v00 + fx * v01
    bot = (1.0 - fx) * v10 + fx * v11
    return (1.0 - fy) * top + fy * bot


def hs_sweep(u, v, ix, iy, it, alpha2, color):
    """One red-black half-sweep of the coupled 2x2 flow update, in place.

    Each pixel of the given checkerboard color gets the exact minimizer of
    the local quadratic (data term + alpha2 * sum over grid edges), holding
    its neighbors fixed; neighbors of a pixel are always the other color, so
    the sweep is an exact block coordinate descent step and never increases
    the energy.
    """
    h, w = u.shape
    su = np.zeros_like(u)
    sv = np.zeros_like(v)
    su[:, 1:] += u[:, :-1]
    su[:, :-1] += u[:, 1:]
    su[1:, :] += u[:-1, :]
    su[:-1, :] += u[1:, :]
    sv[:, 1:] += v[:, :-1]
    sv[:, :-1] += v[:, 1:]
    sv[1:, :] += v[:-1, :]
    sv[:-1, :] += v[1:, :]

    d = np.zeros_like(u)
    d[:, 1:] += 1.0
    d[:, :-1] += 1.0
    d[1:, :] += 1.0
    d[:-1, :] += 1.0

    ad = alpha2 * d
    a11 = ix * ix + ad
    a22 = iy * iy + ad
    a12 = ix * iy
    b1 = alpha2 * su - ix * it
    b2 = alpha2 * sv - iy * it
    det = a11 * a22 - a12 * a12
    unew = (a22 * b1 - a12 * b2) / det
    vnew = (a11 * b2 - a12 * b1) / det

    ii, jj = np.indices((h, w))
    mask = (ii + jj) % 2 == color
    u[mask] = unew[mask]
    v[mask] = vnew[mask]


def hs_energy(u, v, ix, iy, it, alpha2):
    """Quadratic flow energy: data residual plus alpha2-weighted smoothness
    summed over horizontal and vertical grid edges (each edge once)."""
    resid = ix * u + iy * v + it
    e = float(np.sum(resid * resid))
    du_h = u[:, 1:] - u[:, :-1]
    dv_h = v[:, 1:] - v[:, :-1]
    du_v = u[1:, :] - u[:-1, :]
    dv_v = v[1:, :] - v[:-1, :]
    e += alpha2 * float(
        np.sum(du_h * du_h) + np.sum(dv_h * dv_h)
        + np.sum(du_v * du_v) + np.sum(dv_v * dv_v)
    )
    return e
