"""Raster value types and the pixel-level primitives built on them.

Images are thin wrappers around row-major numpy arrays and are treated as
immutable after construction; every operation is a pure function returning
new values, so all of them are safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyMaskError

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]

HUE_BINS = 180  # half-degree hue scale, 0..179

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True, eq=False)
class RgbImage:
    """8-bit RGB raster, pixels shaped (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pixels", np.asarray(self.pixels, dtype=np.uint8))
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("RgbImage expects pixels shaped (height, width, 3)")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ValueError("image must be at least 1x1")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class HsvImage:
    """HSV raster with hue on the 0..179 scale and 8-bit saturation/value."""

    pixels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pixels", np.asarray(self.pixels, dtype=np.uint8))
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("HsvImage expects pixels shaped (height, width, 3)")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if int(self.pixels[..., 0].max()) >= HUE_BINS:
            raise ValueError("hue values must be < 180")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class DepthImage:
    """16-bit raw depth raster; 0 means no return (IR shadow)."""

    pixels: np.ndarray
    raw_to_mm: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "pixels", np.asarray(self.pixels, dtype=np.uint16))
        if self.pixels.ndim != 2:
            raise ValueError("DepthImage expects pixels shaped (height, width)")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not self.raw_to_mm > 0:
            raise ValueError("raw_to_mm must be positive")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean raster marking object pixels."""

    bits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=bool))
        if self.bits.ndim != 2:
            raise ValueError("BinaryMask expects bits shaped (height, width)")

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def area(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True, eq=False)
class AffineTransform:
    """2x3 matrix mapping depth-image pixel coordinates into RGB pixels."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=np.float64))
        if self.matrix.shape != (2, 3):
            raise ValueError("AffineTransform expects a 2x3 matrix")
        if np.linalg.det(self.matrix[:, :2]) == 0.0:
            raise ValueError("singular transform")

    @staticmethod
    def identity() -> "AffineTransform":
        return AffineTransform(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))


def rgb_to_hsv(img: RgbImage) -> HsvImage:
    """Hexcone RGB to HSV with hue reported on the 0..179 integer scale.

    Gray pixels (r = g = b) get saturation 0 and hue 0 by convention.
    """
    r = img.pixels[..., 0].astype(np.int16)
    g = img.pixels[..., 1].astype(np.int16)
    b = img.pixels[..., 2].astype(np.int16)
    v = np.maximum(np.maximum(r, g), b)
    delta = v - np.minimum(np.minimum(r, g), b)

    # v == 0 implies delta == 0, so the guarded denominator is harmless
    sat = np.rint(255.0 * delta / np.maximum(v, 1)).astype(np.uint8)

    on_r = v == r
    on_g = (v == g) & ~on_r
    numer = np.where(on_r, g - b, np.where(on_g, b - r, r - g))
    base = np.where(on_r, 0.0, np.where(on_g, 60.0, 120.0))
    hue = np.rint(base + 30.0 * numer / np.maximum(delta, 1))
    hue[delta == 0] = 0.0
    hue = np.mod(hue, HUE_BINS).astype(np.uint8)
    return HsvImage(np.stack([hue, sat, v.astype(np.uint8)], axis=2))


def abs_diff(a: RgbImage, b: RgbImage) -> np.ndarray:
    """Per-pixel channel-maximum absolute difference as one 8-bit plane."""
    if a.pixels.shape != b.pixels.shape:
        raise ValueError("images must have equal dimensions")
    d = np.abs(a.pixels.astype(np.int16) - b.pixels.astype(np.int16))
    return d.max(axis=2).astype(np.uint8)


def otsu_threshold(hist) -> int:
    """Smallest threshold t maximizing between-class variance of {<=t} / {>t}.

    Scores are compared as exact rationals so ties break toward the smallest
    t independent of float rounding. A histogram with all its mass in one
    bin has no valid split; the populated bin itself is returned.
    """
    counts = np.asarray(hist)
    if counts.shape != (256,):
        raise ValueError("expected a 256-bin histogram")
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ValueError("histogram counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise ValueError("empty histogram")
    total_sum = sum(i * c for i, c in enumerate(counts))

    # between-class variance at t is (s0*w1 - s1*w0)^2 / (w0*w1*total^2);
    # the constant total^2 is dropped and fractions compared cross-multiplied
    best_t = -1
    best_num = 0
    best_den = 1
    w0 = 0
    s0 = 0
    for t in range(256):
        w0 += counts[t]
        s0 += t * counts[t]
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        split = s0 * w1 - (total_sum - s0) * w0
        num = split * split
        den = w0 * w1
        if best_t < 0 or num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    if best_t < 0:
        return next(i for i, c in enumerate(counts) if c)
    return best_t


def smooth_binary(mask: BinaryMask) -> BinaryMask:
    """3x3 majority vote (>= 5 of 9 set), zero padding at the borders."""
    h, w = mask.bits.shape
    padded = np.pad(mask.bits, 1).astype(np.uint8)
    votes = np.zeros((h, w), dtype=np.uint8)
    for dy in range(3):
        for dx in range(3):
            votes += padded[dy:dy + h, dx:dx + w]
    return BinaryMask(votes >= 5)


def _largest_label(labels: np.ndarray) -> tuple[int, int]:
    """Label with the most pixels; area ties go to the component whose first
    set pixel comes earliest in row-major order. Returns (label, area)."""
    areas = np.bincount(labels.ravel())
    areas[0] = 0
    top = int(areas.max())
    tied = np.flatnonzero(areas == top)
    if tied.size == 1:
        return int(tied[0]), top
    flat = labels.ravel()
    first = np.flatnonzero(np.isin(flat, tied))[0]
    return int(flat[first]), top


def largest_component(mask: BinaryMask) -> BinaryMask:
    """Largest 8-connected set component with its interior holes filled.

    A hole is a 4-connected unset region with no pixel on the image border.
    """
    labels, count = ndimage.label(mask.bits, structure=EIGHT_CONNECTED)
    if count == 0:
        raise EmptyMaskError("mask has no set pixels")
    winner, _ = _largest_label(labels)
    comp = labels == winner

    outside, _ = ndimage.label(~comp, structure=FOUR_CONNECTED)
    edge = np.concatenate([outside[0], outside[-1], outside[:, 0], outside[:, -1]])
    touching = np.unique(edge[edge > 0])
    holes = (outside > 0) & ~np.isin(outside, touching)
    return BinaryMask(comp | holes)


def warp_affine(img: DepthImage, t: AffineTransform) -> DepthImage:
    """Resample into the target frame by nearest neighbor.

    Destination pixels that map outside the source get raw value 0, which
    downstream consumers already treat as no-data.
    """
    linear = t.matrix[:, :2]
    offset = t.matrix[:, 2]
    if np.linalg.det(linear) == 0.0:
        raise ValueError("singular transform")
    inv = np.linalg.inv(linear)

    h, w = img.pixels.shape
    gx, gy = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    dx = gx - offset[0]
    dy = gy - offset[1]
    sx = np.rint(inv[0, 0] * dx + inv[0, 1] * dy).astype(np.int64)
    sy = np.rint(inv[1, 0] * dx + inv[1, 1] * dy).astype(np.int64)
    ok = (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)

    out = np.zeros_like(img.pixels)
    out[ok] = img.pixels[sy[ok], sx[ok]]
    return DepthImage(out, img.raw_to_mm)


def hue_histogram(img: HsvImage, mask: BinaryMask) -> np.ndarray:
    """180-bin histogram of the hue values of masked-in pixels."""
    if img.pixels.shape[:2] != mask.bits.shape:
        raise ValueError("image and mask dimensions must match")
    hues = img.pixels[..., 0][mask.bits]
    if hues.size == 0:
        raise EmptyMaskError("mask has no set pixels")
    return np.bincount(hues, minlength=HUE_BINS).astype(np.int64)
