"""The compiled and numpy kernels must agree bit for bit."""
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from thermoscan import kernels

BACKENDS = kernels.backends()
needs_cython = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")
images = arrays(np.uint8, st.tuples(st.integers(1, 24), st.integers(1, 24)))
motions = st.tuples(st.floats(-math.pi, math.pi), st.floats(-30, 30), st.floats(-30, 30))


def test_backend_flag():
    assert kernels.BACKEND in BACKENDS


def test_pure_python_switch():
    env = dict(os.environ, THERMOSCAN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import thermoscan.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_cython
@settings(max_examples=200, deadline=None)
@given(images, st.integers(1, 6), st.integers(-255, 255), st.booleans(), st.booleans(), st.booleans())
def test_valley_filter(pixels, d, t, rows, cols, light):
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    np.testing.assert_array_equal(py.valley_filter(pixels, d, t, rows, cols, light),
                                  cy.valley_filter(pixels, d, t, rows, cols, light))


@needs_cython
@settings(max_examples=200, deadline=None)
@given(images)
def test_asymmetry_sum(pixels):
    if pixels.shape[1] < 2:
        return
    assert BACKENDS["python"].asymmetry_sum(pixels) == BACKENDS["cython"].asymmetry_sum(pixels)


@needs_cython
@settings(max_examples=200, deadline=None)
@given(images, motions, st.booleans(), st.sampled_from([0.0, 140.0]))
def test_warp(pixels, motion, bilinear, fill):
    theta, tx, ty = motion
    args = (math.cos(theta), math.sin(theta), tx, ty, bilinear, fill)
    a = BACKENDS["python"].warp(pixels, *args)
    b = BACKENDS["cython"].warp(pixels, *args)
    assert a.tobytes() == b.tobytes()


@needs_cython
@settings(max_examples=200, deadline=None)
@given(images, images, motions, st.data())
def test_warp_abs_diff(ref, mov, motion, data):
    h, w = min(ref.shape[0], mov.shape[0]), min(ref.shape[1], mov.shape[1])
    ref, mov = ref[:h, :w], mov[:h, :w]
    x0, y0 = data.draw(st.integers(0, w - 1)), data.draw(st.integers(0, h - 1))
    rw, rh = data.draw(st.integers(1, w - x0)), data.draw(st.integers(1, h - y0))
    theta, tx, ty = motion
    args = (math.cos(theta), math.sin(theta), tx, ty, x0, y0, rw, rh)
    assert BACKENDS["python"].warp_abs_diff(ref, mov, *args) == BACKENDS["cython"].warp_abs_diff(ref, mov, *args)


@needs_cython
def test_half_pixel_rounding_agrees():
    # exact .5 sample positions exercise the round-half-up paths of both backends
    pixels = np.arange(64, dtype=np.uint8).reshape(8, 8) * 3
    for tx in (0.5, -0.5, 1.5, 2.5):
        for bilinear in (False, True):
            a = BACKENDS["python"].warp(pixels, 1.0, 0.0, tx, tx, bilinear, 0.0)
            b = BACKENDS["cython"].warp(pixels, 1.0, 0.0, tx, tx, bilinear, 0.0)
            assert a.tobytes() == b.tobytes()
