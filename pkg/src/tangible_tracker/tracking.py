"""Per-frame pointer localization.

Each frame finds the pointer blob by its calibrated color, reads a filtered
depth from the aligned depth crop, shifts the observed pixel to its
marker-plane footprint to undo parallax, and maps the result into virtual
coordinates. Frames are independent: the function is pure with respect to
an immutable calibration profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .color_calibration import HueBounds, hue_bounds_mask
from .errors import (
    AllFilteredError,
    DegenerateError,
    InvalidHeightError,
    NoDepthError,
    NoPointerError,
)
from .imaging import (
    EIGHT_CONNECTED,
    DepthImage,
    Point2,
    Point3,
    RgbImage,
    _largest_label,
    rgb_to_hsv,
)
from .registration import CalibrationProfile

MIN_POINTER_PIXELS = 20
BACKGROUND_FACTOR = 1.10  # depth samples above this multiple of the mean are background
HEIGHT_SLACK = 0.02  # fraction of camera height forgiven below the plane

BBox = tuple[int, int, int, int]  # x, y, w, h


@dataclass(frozen=True)
class PointerFix:
    """One frame's result: observed pixel, depth, corrected real and
    virtual coordinates."""

    pixel: Point2
    bbox: BBox
    depth_mm: float
    real: Point3
    virtual: Point3


@dataclass(frozen=True, eq=False)
class FramePair:
    """RGB frame plus the depth frame already aligned into RGB pixels."""

    rgb: RgbImage
    depth: DepthImage

    def __post_init__(self):
        if (self.rgb.height, self.rgb.width) != (self.depth.height, self.depth.width):
            raise ValueError("rgb and depth dimensions must match after alignment")


def detect_pointer_2d(rgb: RgbImage, bounds: HueBounds) -> tuple[Point2, BBox]:
    """Locate the pointer as the largest in-bounds color blob.

    Returns the blob's bounding rectangle and its center. Raises
    NoPointerError when nothing passes the color key or the largest blob
    is below MIN_POINTER_PIXELS.
    """
    keep = hue_bounds_mask(rgb_to_hsv(rgb), bounds)
    if not keep.bits.any():
        raise NoPointerError("no pixels inside the color bounds")
    labels, _ = ndimage.label(keep.bits, structure=EIGHT_CONNECTED)
    winner, area = _largest_label(labels)
    if area < MIN_POINTER_PIXELS:
        raise NoPointerError(
            f"largest in-bounds blob is {area} px, need >= {MIN_POINTER_PIXELS}"
        )
    ys, xs = np.nonzero(labels == winner)
    x0 = int(xs.min())
    y0 = int(ys.min())
    w = int(xs.max()) - x0 + 1
    h = int(ys.max()) - y0 + 1
    center = (x0 + (w - 1) / 2.0, y0 + (h - 1) / 2.0)
    return center, (x0, y0, w, h)


def estimate_pointer_depth(depth: DepthImage, bbox: BBox) -> float:
    """Two-pass filtered depth of the pointer crop, in millimeters.

    The first pass averages nonzero samples; anything more than 10% above
    that average is background and is dropped; the surviving samples'
    average is the answer.
    """
    x, y, w, h = bbox
    if w < 1 or h < 1 or x < 0 or y < 0 or x + w > depth.width or y + h > depth.height:
        raise ValueError("bbox must lie within the depth image")
    crop = depth.pixels[y:y + h, x:x + w]
    nonzero = crop[crop > 0].astype(np.float64)
    if nonzero.size == 0:
        raise NoDepthError("pointer region is entirely in IR shadow")
    first_mean = nonzero.mean()
    kept = nonzero[nonzero <= BACKGROUND_FACTOR * first_mean]
    if kept.size == 0:
        raise AllFilteredError("background filter removed every depth sample")
    return float(kept.mean() * depth.raw_to_mm)


def correct_parallax(b: Point2, o: Point2, h: float, camera_height_mm: float) -> Point2:
    """Shift the observed pixel B to its marker-plane footprint A.

    A pointer at height h over the plane appears displaced away from the
    principal point O; the footprint is A = O + (B - O) * (1 - h/H).
    """
    if h < 0:
        raise InvalidHeightError("height below the marker plane")
    if h >= camera_height_mm:
        raise InvalidHeightError("pointer at or above the camera")
    if h == 0:
        return (float(b[0]), float(b[1]))  # on the plane: no displacement at all
    scale = 1.0 - h / camera_height_mm
    return (o[0] + (b[0] - o[0]) * scale, o[1] + (b[1] - o[1]) * scale)


def track_frame(frame: FramePair, cal: CalibrationProfile) -> PointerFix:
    """Detect, depth-filter, parallax-correct, and map one frame."""
    center, bbox = detect_pointer_2d(frame.rgb, cal.hue_bounds)
    depth_mm = estimate_pointer_depth(frame.depth, bbox)

    cam_h = cal.camera_height_mm
    height = cam_h - depth_mm
    if height < 0:
        if height < -HEIGHT_SLACK * cam_h:
            raise InvalidHeightError(
                f"pointer {-height:.1f} mm below the marker plane"
            )
        height = 0.0  # sensor noise at plane contact

    plane_pt = correct_parallax(center, cal.principal_point, height, cam_h)

    m = cal.t_rv.matrix
    wv = m[2, 0] * plane_pt[0] + m[2, 1] * plane_pt[1] + m[2, 2]
    if abs(wv) < 1e-12:
        raise DegenerateError("plane point maps to infinity under t_rv")
    xv = (m[0, 0] * plane_pt[0] + m[0, 1] * plane_pt[1] + m[0, 2]) / wv
    yv = (m[1, 0] * plane_pt[0] + m[1, 1] * plane_pt[1] + m[1, 2]) / wv
    zv = cal.t_rv.rho_z * height

    return PointerFix(
        pixel=center,
        bbox=bbox,
        depth_mm=depth_mm,
        real=(plane_pt[0], plane_pt[1], height),
        virtual=(xv, yv, zv),
    )


def frame_record(index: int, fix: PointerFix) -> dict:
    """JSONL payload for a successfully tracked frame."""
    return {
        "frame": index,
        "px": [fix.pixel[0], fix.pixel[1]],
        "depth_mm": fix.depth_mm,
        "real": list(fix.real),
        "virtual": list(fix.virtual),
        "status": "ok",
    }


def error_record(index: int, status: str) -> dict:
    """JSONL payload for a failed frame; coordinates are nulled but the
    line is still emitted so consumers never lose frame sync."""
    return {
        "frame": index,
        "px": None,
        "depth_mm": None,
        "real": None,
        "virtual": None,
        "status": status,
    }
