"""Shadow / light valley detectors with a variable kernel distance.

A pixel is a *shadow* valley when its neighbours at distance ``d`` are
brighter than it by more than ``t``; a *light* ridge is the mirror case.
The full detectors test both the vertical pair (rows i-d, i+d) and the
horizontal pair (columns j-d, j+d); the directional variant tests one pair.

Pixels closer than ``d`` to a border cannot be evaluated and are always 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import kernels
from .core import BinaryMask, ThermalImage
from .errors import ValidationError, parse_enum

__all__ = [
    "Axis",
    "Polarity",
    "FilterParams",
    "shadow_sobel",
    "light_sobel",
    "directional_valley",
]


class Axis(str, Enum):
    ROWS = "rows"  # compare P[i-d, j] and P[i+d, j]
    COLS = "cols"  # compare P[i, j-d] and P[i, j+d]
    BOTH = "both"


class Polarity(str, Enum):
    SHADOW = "shadow"
    LIGHT = "light"


@dataclass(frozen=True)
class FilterParams:
    """Parameters of :func:`directional_valley`.

    The defaults pick dark vertical structures (the lateral neck borders):
    shadow polarity, column-pair comparison, ``t=+40``, ``d=4``.
    """

    d: int = 4
    t: int = 40
    axis: Axis = Axis.COLS
    polarity: Polarity = Polarity.SHADOW

    def __post_init__(self):
        object.__setattr__(self, "axis", parse_enum(Axis, self.axis))
        object.__setattr__(self, "polarity", parse_enum(Polarity, self.polarity))
        if int(self.d) != self.d or self.d < 1:
            raise ValidationError(f"d must be an integer >= 1, got {self.d}")
        if int(self.t) != self.t or abs(self.t) > 255:
            raise ValidationError(f"t must be an integer in [-255, 255], got {self.t}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "t", int(self.t))


def directional_valley(img: ThermalImage, params: FilterParams) -> BinaryMask:
    values = kernels.valley_filter(
        img.pixels,
        params.d,
        params.t,
        params.axis in (Axis.ROWS, Axis.BOTH),
        params.axis in (Axis.COLS, Axis.BOTH),
        params.polarity is Polarity.LIGHT,
    )
    return BinaryMask(values)


def shadow_sobel(img: ThermalImage, d: int, t: int) -> BinaryMask:
    return directional_valley(img, FilterParams(d, t, Axis.BOTH, Polarity.SHADOW))


def light_sobel(img: ThermalImage, d: int, t: int) -> BinaryMask:
    return directional_valley(img, FilterParams(d, t, Axis.BOTH, Polarity.LIGHT))
