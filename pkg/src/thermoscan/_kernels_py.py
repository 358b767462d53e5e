"""Pure numpy implementation of the inner-loop kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and bit-identical output; ``thermoscan.kernels`` picks one at import time.
"""
import numpy as np

# Sample positions this close outside the grid are snapped onto it, so
# rotations by multiples of pi/2 keep their edge rows and columns.
EDGE_EPS = 1e-9


def valley_filter(pixels, d, t, rows, cols, light):
    """1 where the pixel is a valley (shadow) or ridge (light) deeper than ``t``.

    ``rows`` enables the comparison with P[i-d, j] and P[i+d, j];
    ``cols`` the one with P[i, j-d] and P[i, j+d]. Pixels closer than ``d``
    to any border stay 0.
    """
    p = np.asarray(pixels, dtype=np.int32)
    h, w = p.shape
    out = np.zeros((h, w), dtype=np.uint8)
    if h <= 2 * d or w <= 2 * d:
        return out
    c = p[d:h - d, d:w - d]
    hit = np.ones(c.shape, dtype=bool)
    sign = -1 if light else 1
    if rows:
        up = p[0:h - 2 * d, d:w - d]
        down = p[2 * d:h, d:w - d]
        hit &= (sign * (up - c) > t) & (sign * (down - c) > t)
    if cols:
        left = p[d:h - d, 0:w - 2 * d]
        right = p[d:h - d, 2 * d:w]
        hit &= (sign * (left - c) > t) & (sign * (right - c) > t)
    out[d:h - d, d:w - d] = hit
    return out


def asymmetry_sum(pixels):
    """Sum over all pixels of min |I(i,j) - I(i+p, n-1-j+q)|, p,q in {-1,0,1}.

    Neighbour indices are clamped into the grid. Returned as an exact integer.
    """
    p = np.asarray(pixels, dtype=np.int32)
    h, w = p.shape
    # clamp(n-1-j+q) mirrored back is clamp(j-q): an edge-padded mirror image
    # searched over the same 3x3 offsets.
    mirrored = np.pad(p[:, ::-1], 1, mode="edge")
    best = np.full((h, w), 255, dtype=np.int32)
    for di in range(3):
        for dj in range(3):
            cand = mirrored[di:di + h, dj:dj + w]
            np.minimum(best, np.abs(p - cand), out=best)
    return int(best.sum(dtype=np.int64))


def _inverse_coords(h, w, cos_t, sin_t, tx, ty):
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    dx = x - tx
    dy = y - ty
    xs = cos_t * dx + sin_t * dy
    ys = cos_t * dy - sin_t * dx
    return xs, ys


def _sample_nearest(src, xs, ys, fill):
    h, w = src.shape
    xi = np.floor(xs + 0.5)
    yi = np.floor(ys + 0.5)
    inside = (xi >= 0) & (xi <= w - 1) & (yi >= 0) & (yi <= h - 1)
    out = np.full(xs.shape, fill, dtype=np.float64)
    out[inside] = src[yi[inside].astype(np.intp), xi[inside].astype(np.intp)]
    return out


def _sample_bilinear(src, xs, ys, fill):
    h, w = src.shape
    inside = (xs >= -EDGE_EPS) & (xs <= (w - 1) + EDGE_EPS) & (ys >= -EDGE_EPS) & (ys <= (h - 1) + EDGE_EPS)
    out = np.full(xs.shape, fill, dtype=np.float64)
    xv = np.clip(xs[inside], 0.0, w - 1.0)
    yv = np.clip(ys[inside], 0.0, h - 1.0)
    x0 = np.minimum(np.floor(xv), max(w - 2, 0)).astype(np.intp)
    y0 = np.minimum(np.floor(yv), max(h - 2, 0)).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xv - x0
    fy = yv - y0
    a = src[y0, x0]
    b = src[y0, x1]
    c = src[y1, x0]
    d = src[y1, x1]
    top = (1.0 - fx) * a + fx * b
    bottom = (1.0 - fx) * c + fx * d
    out[inside] = (1.0 - fy) * top + fy * bottom
    return out


def warp(src, cos_t, sin_t, tx, ty, bilinear, fill):
    """Resample ``src`` (float64) at the inverse image of every output pixel."""
    src = np.asarray(src, dtype=np.float64)
    h, w = src.shape
    xs, ys = _inverse_coords(h, w, cos_t, sin_t, tx, ty)
    if bilinear:
        return _sample_bilinear(src, xs, ys, fill)
    return _sample_nearest(src, xs, ys, fill)


def warp_abs_diff(ref, mov, cos_t, sin_t, tx, ty, x0, y0, w, h):
    """Sum of |ref - warp_nearest(mov)| over the rectangle, fill 0 outside."""
    ref = np.asarray(ref)
    mov = np.asarray(mov)
    mh, mw = mov.shape
    y, x = np.mgrid[y0:y0 + h, x0:x0 + w].astype(np.float64)
    dx = x - tx
    dy = y - ty
    xs = cos_t * dx + sin_t * dy
    ys = cos_t * dy - sin_t * dx
    xi = np.floor(xs + 0.5)
    yi = np.floor(ys + 0.5)
    inside = (xi >= 0) & (xi <= mw - 1) & (yi >= 0) & (yi <= mh - 1)
    sampled = np.zeros((h, w), dtype=np.int32)
    sampled[inside] = mov[yi[inside].astype(np.intp), xi[inside].astype(np.intp)]
    diff = np.abs(ref[y0:y0 + h, x0:x0 + w].astype(np.int32) - sampled)
    return int(diff.sum(dtype=np.int64))
