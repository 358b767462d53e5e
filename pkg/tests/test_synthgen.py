import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermoscan.core import Rect, crop
from thermoscan.errors import SpecOutOfBounds, UnreadableFile
from thermoscan.features import asymmetry, threshold
from thermoscan.registration import RigidTransform2D
from thermoscan.roi import detect_thyroid_roi
from thermoscan.synthgen import (
    Nodule,
    PhantomSpec,
    generate_phantom,
    ground_truth,
    load_spec,
    neck_phantom,
    random_jitter,
    save_spec,
)


def small_spec(**changes):
    base = dict(width=40, height=30, background=140, neck_band_cols=((5, 7), (33, 35)), band_intensity=60)
    base.update(changes)
    return PhantomSpec(**base)


def test_plain_scene_values():
    spec = small_spec(marker_rect=Rect(15, 2, 10, 4), marker_intensity=30)
    (img,) = generate_phantom(spec)
    expected = np.full((30, 40), 140, dtype=np.uint8)
    expected[:, 5:7] = 60
    expected[:, 33:35] = 60
    expected[2:6, 15:25] = 30
    np.testing.assert_array_equal(img.pixels, expected)
    assert img.meta.frame_index == 0


def test_outlined_marker_and_neck():
    spec = small_spec(neck_intensity=170, band_rows=(10, 30), marker_rect=Rect(15, 0, 10, 8),
                      marker_intensity=30, marker_outline=2)
    px = generate_phantom(spec)[0].pixels
    assert px[9, 20] == 140 and px[15, 20] == 170 and px[15, 6] == 60 and px[5, 6] == 140
    assert px[0, 15] == 30 and px[4, 20] == 140  # hollow inside


def test_same_seed_is_bit_identical():
    spec = neck_phantom(Nodule((250, 260), 40, 240, 12), jitter=random_jitter(4, 3, 8, seed=9),
                        noise_sigma=2.5, seed=17)
    a, b = generate_phantom(spec), generate_phantom(spec)
    assert all(x == y for x, y in zip(a, b))
    other = generate_phantom(spec.with_(seed=18))
    assert not all(x == y for x, y in zip(a, other))


def test_nodule_peak_location():
    c = (250.0, 270.0)
    img = generate_phantom(neck_phantom(Nodule(c, 40, 255, 12)))[0]
    i, j = np.unravel_index(np.argmax(img.pixels), img.shape)
    assert img.pixels[i, j] == 255
    assert abs(j - c[0]) <= 1 and abs(i - c[1]) <= 1


def test_ground_truth():
    spec = neck_phantom(jitter=random_jitter(3, 2, 4, seed=1))
    truth = ground_truth(spec)
    assert truth.nodule_mask.count() == 0
    assert truth.jitter == spec.jitter
    assert truth.transforms()[1] == RigidTransform2D(*spec.jitter[1])
    assert truth.band_rects == (Rect(75, 120, 2, 310), Rect(403, 120, 2, 310))


def test_nodule_mask_matches_rendered_frame():
    spec = neck_phantom(Nodule((300, 260), 45, 250, 14))
    truth = ground_truth(spec, 209)
    assert truth.nodule_mask.count() > 0
    assert truth.nodule_mask == threshold(generate_phantom(spec)[0], 209)


def test_symmetric_phantom_has_zero_asymmetry():
    img = generate_phantom(neck_phantom(Nodule((239.5, 270), 30, 230, 12)))[0]
    assert asymmetry(crop(img, detect_thyroid_roi(img))) == 0.0


def test_jittered_frames_move_content():
    spec = neck_phantom(jitter=((0, 0, 0), (0, 5, 0)))
    f0, f1 = generate_phantom(spec)
    np.testing.assert_array_equal(f1.pixels[:, 100:300], f0.pixels[:, 95:295])
    assert f1.meta.frame_index == 1


@pytest.mark.parametrize("changes", [
    {"background": 300},
    {"neck_band_cols": ((10, 5), (20, 25))},
    {"neck_band_cols": ((5, 7),)},
    {"jitter": ((0.1, 0, 0),)},
    {"marker_rect": Rect(35, 0, 10, 5)},
    {"noise_sigma": -1},
    {"band_rows": (10, 40)},
])
def test_invalid_specs(changes):
    with pytest.raises(SpecOutOfBounds):
        small_spec(**changes)


def test_nodule_validation():
    with pytest.raises(SpecOutOfBounds):
        Nodule((0, 0), 5, 256, 2)
    with pytest.raises(SpecOutOfBounds):
        Nodule((0, 0), 0, 200, 2)


def test_spec_file_round_trip(tmp_path):
    spec = neck_phantom(Nodule((300, 260), 45, 250, 14), jitter=random_jitter(3, 2, 4, seed=2), noise_sigma=1.5)
    save_spec(spec, tmp_path / "spec.json")
    assert load_spec(tmp_path / "spec.json") == spec
    with pytest.raises(UnreadableFile):
        load_spec(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text('{"width": 5, "colour": 1}')
    with pytest.raises(SpecOutOfBounds):
        load_spec(tmp_path / "bad.json")


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.floats(0, 5), st.floats(0, 10), st.integers(0, 2**31))
def test_random_jitter_bounds(n, max_theta, max_shift, seed):
    jitter = random_jitter(n, max_theta, max_shift, seed)
    assert len(jitter) == n and jitter[0] == (0.0, 0.0, 0.0)
    for theta, tx, ty in jitter:
        assert abs(theta) <= math.radians(max_theta) + 1e-15
        assert abs(tx) <= max_shift and abs(ty) <= max_shift
