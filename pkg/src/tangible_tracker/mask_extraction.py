"""Isolate a newly placed object from a background / with-object image pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMaskError, TooSmallError
from .imaging import (
    BinaryMask,
    RgbImage,
    abs_diff,
    largest_component,
    otsu_threshold,
    smooth_binary,
)

DEFAULT_MIN_AREA = 200  # px, ~0.07% of a 640x480 frame


@dataclass(frozen=True, eq=False)
class MaskRequest:
    background: RgbImage
    with_object: RgbImage
    min_area: int = DEFAULT_MIN_AREA

    def __post_init__(self):
        if self.background.pixels.shape != self.with_object.pixels.shape:
            raise ValueError("background and object images must have equal dimensions")
        if self.min_area < 1:
            raise ValueError("min_area must be at least 1")


def extract_mask(req: MaskRequest) -> BinaryMask:
    """Difference, threshold, despeckle, and keep the largest filled region.

    Raises EmptyMaskError when nothing changed between the two captures and
    TooSmallError when the surviving region is below ``min_area`` (the
    object is indistinguishable from the background).
    """
    diff = abs_diff(req.background, req.with_object)
    hist = np.bincount(diff.ravel(), minlength=256)
    t = otsu_threshold(hist)
    thresholded = BinaryMask(diff > t)
    if not thresholded.bits.any():
        raise EmptyMaskError("no pixels differ from the background")
    component = largest_component(smooth_binary(thresholded))
    if component.area < req.min_area:
        raise TooSmallError(
            f"largest changed region is {component.area} px, need >= {req.min_area}"
        )
    return component
