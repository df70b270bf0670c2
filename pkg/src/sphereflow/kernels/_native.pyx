# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the pure-numpy kernels.

Every arithmetic expression mirrors _fallback.py in evaluation order, and
setup.py disables FMA contraction, so the two implementations return
bit-identical doubles. The sweep updates pixels in place as it scans; that
is equivalent to the fallback's bulk masked assignment because the four
neighbors of a pixel always have the opposite checkerboard parity.
"""

from libc.math cimport floor

import numpy as np

MODE_EDGE = 0
MODE_SPHERE = 1

cdef double SNAP = 1e-9


cdef inline double _fetch_edge(const double[:, ::1] img, Py_ssize_t h,
                               Py_ssize_t w, long long r, long long c) noexcept nogil:
    if r < 0:
        r = 0
    elif r > h - 1:
        r = h - 1
    if c < 0:
        c = 0
    elif c > w - 1:
        c = w - 1
    return img[<Py_ssize_t> r, <Py_ssize_t> c]


cdef inline double _fetch_sphere(const double[:, ::1] img, Py_ssize_t h,
                                 Py_ssize_t w, long long r, long long c) noexcept nogil:
    cdef long long shift = 0
    cdef long long cc
    if r < 0:
        r = -1 - r
        shift = w // 2
    elif r > h - 1:
        r = 2 * h - 1 - r
        shift = w // 2
    if r < 0:
        r = 0
    elif r > h - 1:
        r = h - 1
    cc = (c + shift) % w
    if cc < 0:
        cc += w
    return img[<Py_ssize_t> r, <Py_ssize_t> cc]


def bilinear_sample_1d(const double[:, ::1] img, const double[::1] rows,
                       const double[::1] cols, int mode):
    """Bilinear interpolation at fractional (row, col) positions; see the
    fallback docstring for the mode semantics."""
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t n = rows.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef bint sphere = mode == MODE_SPHERE
    cdef Py_ssize_t k
    cdef double base, fy, fx, v00, v01, v10, v11, top, bot
    cdef long long r0, c0, r1, c1
    with nogil:
        for k in range(n):
            base = floor(rows[k])
            fy = rows[k] - base
            if fy > 1.0 - SNAP:
                base += 1.0
                fy = 0.0
            elif fy < SNAP:
                fy = 0.0
            r0 = <long long> base
            base = floor(cols[k])
            fx = cols[k] - base
            if fx > 1.0 - SNAP:
                base += 1.0
                fx = 0.0
            elif fx < SNAP:
                fx = 0.0
            c0 = <long long> base
            r1 = r0 + 1
            c1 = c0 + 1
            if sphere:
                v00 = _fetch_sphere(img, h, w, r0, c0)
                v01 = _fetch_sphere(img, h, w, r0, c1)
                v10 = _fetch_sphere(img, h, w, r1, c0)
                v11 = _fetch_sphere(img, h, w, r1, c1)
            else:
                v00 = _fetch_edge(img, h, w, r0, c0)
                v01 = _fetch_edge(img, h, w, r0, c1)
                v10 = _fetch_edge(img, h, w, r1, c0)
                v11 = _fetch_edge(img, h, w, r1, c1)
            top = (1.0 - fx) * v00 + fx * v01
            bot = (1.0 - fx) * v10 + fx * v11
            out[k] = (1.0 - fy) * top + fy * bot
    return out_arr


def hs_sweep(double[:, ::1] u, double[:, ::1] v, const double[:, ::1] ix,
             const double[:, ::1] iy, const double[:, ::1] it,
             double alpha2, int color):
    """One in-place red-black half-sweep; twin of the fallback hs_sweep."""
    cdef Py_ssize_t h = u.shape[0]
    cdef Py_ssize_t w = u.shape[1]
    cdef Py_ssize_t i, j
    cdef double su, sv, d, ad, a11, a22, a12, b1, b2, det
    with nogil:
        for i in range(h):
            for j in range((color + i) % 2, w, 2):
                # neighbor accumulation order matches the fallback:
                # left, right, up, down
                su = 0.0
                sv = 0.0
                d = 0.0
                if j > 0:
                    su += u[i, j - 1]
                    sv += v[i, j - 1]
                    d += 1.0
                if j < w - 1:
                    su += u[i, j + 1]
                    sv += v[i, j + 1]
                    d += 1.0
                if i > 0:
                    su += u[i - 1, j]
                    sv += v[i - 1, j]
                    d += 1.0
                if i < h - 1:
                    su += u[i + 1, j]
                    sv += v[i + 1, j]
                    d += 1.0
                ad = alpha2 * d
                a11 = ix[i, j] * ix[i, j] + ad
                a22 = iy[i, j] * iy[i, j] + ad
                a12 = ix[i, j] * iy[i, j]
                b1 = alpha2 * su - ix[i, j] * it[i, j]
                b2 = alpha2 * sv - iy[i, j] * it[i, j]
                det = a11 * a22 - a12 * a12
                u[i, j] = (a22 * b1 - a12 * b2) / det
                v[i, j] = (a11 * b2 - a12 * b1) / det
