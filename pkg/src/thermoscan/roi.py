"""Sliding-rectangle ROI location on a binary edge map.

The ROI is the fixed-size window holding the most white pixels. Window sums
come from a summed-area table, so every candidate costs O(1). Small marker
residuals are removed first by locating and blanking the densest window of a
reduced size.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import BinaryMask, Rect, ThermalImage
from .edge_filter import FilterParams, directional_valley
from .errors import RectLargerThanImage, ValidationError, parse_enum

__all__ = [
    "Scan",
    "RoiParams",
    "summed_area_table",
    "count_white",
    "find_roi",
    "remove_residuals",
    "detect_thyroid_roi",
]


class Scan(str, Enum):
    TOP_DOWN = "top_down"
    BOTTOM_UP = "bottom_up"


@dataclass(frozen=True)
class RoiParams:
    roi_w: int = 330
    roi_h: int = 310
    residual_w: int = 110
    residual_h: int = 110
    residual_passes: int = 1
    scan: Scan = Scan.BOTTOM_UP
    stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scan", parse_enum(Scan, self.scan))
        for name in ("roi_w", "roi_h", "residual_w", "residual_h", "stride"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.residual_passes < 0:
            raise ValidationError("residual_passes must be >= 0")


def summed_area_table(values: np.ndarray) -> np.ndarray:
    """Zero-padded integral image: ``S[y, x]`` is the sum of ``values[:y, :x]``."""
    h, w = values.shape
    sat = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(values, axis=0, dtype=np.int64), axis=1, out=sat[1:, 1:])
    return sat


def count_white(mask: BinaryMask, rect: Rect) -> int:
    rect.check_within(mask.width, mask.height)
    return int(mask.values[rect.slices].sum(dtype=np.int64))


def _window_sums(sat: np.ndarray, w: int, h: int) -> np.ndarray:
    # sums[y, x] = white pixels in the w x h window whose top-left is (x, y)
    return sat[h:, w:] - sat[:-h, w:] - sat[h:, :-w] + sat[:-h, :-w]


def find_roi(mask: BinaryMask, w: int, h: int, scan: Scan = Scan.TOP_DOWN, stride: int = 1) -> Rect:
    """Window of size ``w x h`` with the most white pixels.

    Candidates are visited row by row (from the top or from the bottom,
    left to right inside a row) on a ``stride`` lattice anchored at the first
    row of the scan and column 0. The first maximum met wins.
    """
    scan = parse_enum(Scan, scan)
    if w > mask.width or h > mask.height or w < 1 or h < 1:
        raise RectLargerThanImage(f"{w}x{h} window does not fit a {mask.width}x{mask.height} mask")
    if stride < 1:
        raise ValidationError("stride must be >= 1")
    sums = _window_sums(summed_area_table(mask.values), w, h)
    last_y = mask.height - h
    if scan is Scan.TOP_DOWN:
        ys = np.arange(0, last_y + 1, stride)
    else:
        ys = np.arange(last_y, -1, -stride)
    xs = np.arange(0, mask.width - w + 1, stride)
    grid = sums[np.ix_(ys, xs)]
    flat = int(np.argmax(grid))  # first occurrence in row-major order
    row, col = divmod(flat, len(xs))
    return Rect(int(xs[col]), int(ys[row]), w, h)


def remove_residuals(mask: BinaryMask, residual_w: int, residual_h: int, passes: int = 1) -> BinaryMask:
    """Blank the densest ``residual_w x residual_h`` window, ``passes`` times."""
    if residual_w > mask.width or residual_h > mask.height:
        raise RectLargerThanImage(
            f"{residual_w}x{residual_h} residual window does not fit a {mask.width}x{mask.height} mask"
        )
    values = mask.values.copy()
    for _ in range(passes):
        rect = find_roi(BinaryMask(values), residual_w, residual_h, Scan.TOP_DOWN, 1)
        values[rect.slices] = 0
    return BinaryMask(values)


def detect_thyroid_roi(
    img: ThermalImage,
    filter_params: FilterParams = FilterParams(),
    roi_params: RoiParams = RoiParams(),
) -> Rect:
    """Edge-filter the frame, erase marker residuals, then scan for the ROI."""
    if roi_params.roi_w > img.width or roi_params.roi_h > img.height:
        raise RectLargerThanImage(
            f"ROI {roi_params.roi_w}x{roi_params.roi_h} larger than {img.width}x{img.height} image"
        )
    edges = directional_valley(img, filter_params)
    cleaned = remove_residuals(edges, roi_params.residual_w, roi_params.residual_h, roi_params.residual_passes)
    return find_roi(cleaned, roi_params.roi_w, roi_params.roi_h, roi_params.scan, roi_params.stride)
