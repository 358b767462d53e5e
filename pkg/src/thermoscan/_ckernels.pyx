# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_kernels_py``.

Arithmetic is written in the same order as the numpy fallback so both
backends return identical bits.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

cdef double EDGE_EPS = 1e-9


def valley_filter(const unsigned char[:, :] pixels, int d, int t, bint rows, bint cols, bint light):
    cdef Py_ssize_t h = pixels.shape[0], w = pixels.shape[1]
    cdef Py_ssize_t i, j
    cdef int c, sign = -1 if light else 1
    cdef bint hit
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, :] out = out_arr
    if h <= 2 * d or w <= 2 * d:
        return out_arr
    with nogil:
        for i in range(d, h - d):
            for j in range(d, w - d):
                c = pixels[i, j]
                hit = True
                if rows:
                    hit = (sign * (<int>pixels[i - d, j] - c) > t) and (sign * (<int>pixels[i + d, j] - c) > t)
                if hit and cols:
                    hit = (sign * (<int>pixels[i, j - d] - c) > t) and (sign * (<int>pixels[i, j + d] - c) > t)
                out[i, j] = 1 if hit else 0
    return out_arr


cdef inline Py_ssize_t _clamp(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def asymmetry_sum(const unsigned char[:, :] pixels):
    cdef Py_ssize_t m = pixels.shape[0], n = pixels.shape[1]
    cdef Py_ssize_t i, j, p, q, ii, jj
    cdef int v, diff, best
    cdef long long total = 0
    with nogil:
        for i in range(m):
            for j in range(n):
                v = pixels[i, j]
                best = 255
                for p in range(-1, 2):
                    ii = _clamp(i + p, 0, m - 1)
                    for q in range(-1, 2):
                        jj = _clamp(n - 1 - j + q, 0, n - 1)
                        diff = v - <int>pixels[ii, jj]
                        if diff < 0:
                            diff = -diff
                        if diff < best:
                            best = diff
                total += best
    return total


def warp(src, double cos_t, double sin_t, double tx, double ty, bint bilinear, double fill):
    cdef const double[:, :] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1]
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, :] out = out_arr
    cdef Py_ssize_t i, j, x0, y0, x1, y1, xi, yi
    cdef double dx, dy, xs, ys, xv, yv, fx, fy, top, bottom
    cdef Py_ssize_t xmax0 = w - 2 if w > 1 else 0
    cdef Py_ssize_t ymax0 = h - 2 if h > 1 else 0
    with nogil:
        for i in range(h):
            for j in range(w):
                dx = <double>j - tx
                dy = <double>i - ty
                xs = cos_t * dx + sin_t * dy
                ys = cos_t * dy - sin_t * dx
                if not bilinear:
                    xs = floor(xs + 0.5)
                    ys = floor(ys + 0.5)
                    if xs >= 0 and xs <= w - 1 and ys >= 0 and ys <= h - 1:
                        out[i, j] = s[<Py_ssize_t>ys, <Py_ssize_t>xs]
                    else:
                        out[i, j] = fill
                    continue
                if xs < -EDGE_EPS or xs > (w - 1) + EDGE_EPS or ys < -EDGE_EPS or ys > (h - 1) + EDGE_EPS:
                    out[i, j] = fill
                    continue
                xv = xs
                if xv < 0.0:
                    xv = 0.0
                elif xv > w - 1.0:
                    xv = w - 1.0
                yv = ys
                if yv < 0.0:
                    yv = 0.0
                elif yv > h - 1.0:
                    yv = h - 1.0
                x0 = <Py_ssize_t>floor(xv)
                if x0 > xmax0:
                    x0 = xmax0
                y0 = <Py_ssize_t>floor(yv)
                if y0 > ymax0:
                    y0 = ymax0
                x1 = x0 + 1 if x0 + 1 < w else w - 1
                y1 = y0 + 1 if y0 + 1 < h else h - 1
                fx = xv - x0
                fy = yv - y0
                top = (1.0 - fx) * s[y0, x0] + fx * s[y0, x1]
                bottom = (1.0 - fx) * s[y1, x0] + fx * s[y1, x1]
                out[i, j] = (1.0 - fy) * top + fy * bottom
    return out_arr


def warp_abs_diff(const unsigned char[:, :] ref, const unsigned char[:, :] mov,
                  double cos_t, double sin_t, double tx, double ty,
                  Py_ssize_t x0, Py_ssize_t y0, Py_ssize_t w, Py_ssize_t h):
    cdef Py_ssize_t mh = mov.shape[0], mw = mov.shape[1]
    cdef Py_ssize_t i, j
    cdef double dx, dy, xs, ys
    cdef int sampled, diff
    cdef long long total = 0
    with nogil:
        for i in range(y0, y0 + h):
            for j in range(x0, x0 + w):
                dx = <double>j - tx
                dy = <double>i - ty
                xs = floor(cos_t * dx + sin_t * dy + 0.5)
                ys = floor(cos_t * dy - sin_t * dx + 0.5)
                if xs >= 0 and xs <= mw - 1 and ys >= 0 and ys <= mh - 1:
                    sampled = mov[<Py_ssize_t>ys, <Py_ssize_t>xs]
                else:
                    sampled = 0
                diff = <int>ref[i, j] - sampled
                if diff < 0:
                    diff = -diff
                total += diff
    return total
