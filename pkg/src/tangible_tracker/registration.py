"""Build the pixel-to-virtual planar map and the frozen calibration profile.

The detected marker corners are ordered, paired with the fixed virtual
corner constants, and a projective matrix is fit by normalized direct
linear transform over the four corners plus the marker centroid. The
resulting profile is immutable and shared by the whole tracking loop.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .color_calibration import HueBounds, calibrate_hue_bounds
from .corner_detection import CMinMaxParams, cminmax_corners, mask_centroid
from .errors import DegenerateError, ResidualTooHighError
from .imaging import AffineTransform, Point2, RgbImage
from .mask_extraction import DEFAULT_MIN_AREA, MaskRequest, extract_mask

RESIDUAL_LIMIT = 0.02  # virtual units, mean over the five fit points


@dataclass(frozen=True)
class VirtualMarker:
    """Fixed virtual-frame coordinates of the reference rectangle."""

    corners: tuple[Point2, ...] = (
        (-0.5, -0.75),
        (0.5, -0.75),
        (0.5, 0.75),
        (-0.5, 0.75),
    )
    centroid: Point2 = (0.0, 0.0)


# Ordered image corners (top-left, bottom-left, bottom-right, top-right)
# pair with the virtual cycle walked so that virtual y grows downward in
# the image; an axis-aligned marker then fits a pure-scale matrix.
_VIRTUAL = VirtualMarker()
CORNER_TARGETS = (
    _VIRTUAL.corners[0],
    _VIRTUAL.corners[3],
    _VIRTUAL.corners[2],
    _VIRTUAL.corners[1],
)


@dataclass(frozen=True, eq=False)
class Homography:
    """3x3 real-to-virtual planar map plus the scalar depth factor."""

    matrix: np.ndarray
    rho_z: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("Homography expects a 3x3 matrix")
        if m[2, 2] != 0.0:
            m = m / m[2, 2]
        if np.linalg.det(m) == 0.0:
            raise ValueError("homography matrix must be invertible")
        object.__setattr__(self, "matrix", m)
        if not self.rho_z > 0:
            raise ValueError("rho_z must be positive")


@dataclass(frozen=True, eq=False)
class CalibrationProfile:
    """Frozen output of initialization, consumed by every tracked frame."""

    depth_to_rgb: AffineTransform
    hue_bounds: HueBounds
    t_rv: Homography
    camera_height_mm: float
    principal_point: Point2
    raw_to_mm: float = 1.0

    def __post_init__(self):
        if not self.camera_height_mm > 0:
            raise ValueError("camera_height_mm must be positive")
        if not self.raw_to_mm > 0:
            raise ValueError("raw_to_mm must be positive")


_TOP_LEFT_ANGLE = math.atan2(-1.0, -1.0) % math.tau


def order_corners(corners, centroid: Point2) -> tuple[Point2, ...]:
    """Sort 4 corners counterclockwise on screen about the centroid.

    The cycle starts at the corner angularly nearest the up-left diagonal
    (top-left in image coordinates); angle ties break by radial distance.
    The same set of corners yields the same ordering in any input order.
    """
    pts = [(float(x), float(y)) for x, y in corners]
    if len(pts) != 4:
        raise ValueError("exactly 4 corners are required")
    if len(set(pts)) != 4:
        raise ValueError("duplicate corners")
    cx, cy = float(centroid[0]), float(centroid[1])
    rel = [(x - cx, y - cy) for x, y in pts]
    if any(dx == 0.0 and dy == 0.0 for dx, dy in rel):
        raise ValueError("centroid is not strictly inside the corner hull")
    angles = [math.atan2(dy, dx) % math.tau for dx, dy in rel]
    radii = [math.hypot(dx, dy) for dx, dy in rel]

    # strictly inside the hull <=> no angular gap of half a turn or more
    ordered_angles = sorted(angles)
    gaps = [b - a for a, b in zip(ordered_angles, ordered_angles[1:])]
    gaps.append(ordered_angles[0] + math.tau - ordered_angles[-1])
    if max(gaps) >= math.pi:
        raise ValueError("centroid is not strictly inside the corner hull")

    def tl_distance(i: int) -> float:
        d = abs(angles[i] - _TOP_LEFT_ANGLE)
        return min(d, math.tau - d)

    start = min(range(4), key=lambda i: (tl_distance(i), radii[i], angles[i]))
    # screen counterclockwise is descending atan2 angle (y points down)
    order = sorted(range(4),
                   key=lambda i: ((angles[start] - angles[i]) % math.tau, radii[i]))
    return tuple(pts[i] for i in order)


def _normalize(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Similarity moving the points to zero mean and mean distance sqrt(2)."""
    center = pts.mean(axis=0)
    spread = pts - center
    mean_dist = np.hypot(spread[:, 0], spread[:, 1]).mean()
    if mean_dist < 1e-12:
        raise DegenerateError("correspondence points coincide")
    s = math.sqrt(2.0) / mean_dist
    t = np.array([[s, 0.0, -s * center[0]],
                  [0.0, s, -s * center[1]],
                  [0.0, 0.0, 1.0]])
    return t, spread * s


def _check_collinear_triples(pts: np.ndarray) -> None:
    """Minimal 4-point sets lose rank as soon as any 3 points are collinear.

    Larger sets legitimately contain collinear triples (the registration
    fit pairs a rectangle's corners with its centroid, which sits on both
    diagonals), so those rely on the spectrum check instead.
    """
    if len(pts) != 4:
        return
    span = float(np.ptp(pts, axis=0).max())
    tol = 1e-9 * max(span * span, 1.0)
    for i in range(4):
        for j in range(i + 1, 4):
            for k in range(j + 1, 4):
                ab = pts[j] - pts[i]
                ac = pts[k] - pts[i]
                if abs(ab[0] * ac[1] - ab[1] * ac[0]) <= tol:
                    raise DegenerateError(
                        f"source points {i}, {j}, {k} are collinear"
                    )


def estimate_homography(src, dst) -> np.ndarray:
    """Least-squares projective fit by normalized direct linear transform.

    Both point sets are translated to zero mean and scaled to mean distance
    sqrt(2) before solving, and the result is renormalized so h33 = 1.
    """
    s = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    d = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if len(s) != len(d):
        raise ValueError("source and destination point counts differ")
    if len(s) < 4:
        raise ValueError("at least 4 correspondences are required")
    if not (np.isfinite(s).all() and np.isfinite(d).all()):
        raise ValueError("correspondences must be finite")
    _check_collinear_triples(s)

    ts, sn = _normalize(s)
    td, dn = _normalize(d)
    rows = []
    for (x, y), (u, v) in zip(sn, dn):
        rows.append([-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u])
        rows.append([0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v])
    a = np.asarray(rows)
    _, sv, vt = np.linalg.svd(a)
    spectrum = np.zeros(9)
    spectrum[:sv.size] = sv
    if spectrum[7] < 1e-8 * spectrum[0]:
        raise DegenerateError("correspondences do not determine a unique map")
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.inv(td) @ hn @ ts
    if abs(h[2, 2]) > 1e-12:
        h = h / h[2, 2]
    return h


def apply_homography(h: np.ndarray, pts) -> np.ndarray:
    p = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    ones = np.ones((len(p), 1))
    mapped = np.hstack([p, ones]) @ np.asarray(h).T
    return mapped[:, :2] / mapped[:, 2:3]


def mean_reprojection_error(h: np.ndarray, src, dst) -> float:
    d = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    err = apply_homography(h, src) - d
    return float(np.hypot(err[:, 0], err[:, 1]).mean())


@dataclass(frozen=True, eq=False)
class CalibrationSummary:
    """Profile plus the intermediate fit evidence worth surfacing."""

    profile: CalibrationProfile
    ordered_corners: tuple[Point2, ...]
    centroid: Point2
    fit_residual: float


def calibrate_scene(
    background: RgbImage,
    with_marker: RgbImage,
    with_pointer: RgbImage,
    *,
    depth_to_rgb: AffineTransform,
    camera_height_mm: float,
    principal_point: Point2,
    rho_z: float,
    raw_to_mm: float = 1.0,
    min_area: int = DEFAULT_MIN_AREA,
) -> CalibrationSummary:
    """Run the full initialization and return the profile with fit details.

    The marker mask yields 4 ordered corners plus the centroid; those five
    points are fit against the virtual marker constants. The pointer pair
    yields the hue bounds. Raises ResidualTooHighError when the mean
    reprojection residual of the five points exceeds 0.02 virtual units.
    """
    if not camera_height_mm > 0:
        raise ValueError("camera_height_mm must be positive")
    px, py = float(principal_point[0]), float(principal_point[1])
    if not (0 <= px < background.width and 0 <= py < background.height):
        raise ValueError("principal point must lie inside the image bounds")

    marker_mask = extract_mask(MaskRequest(background, with_marker, min_area))
    detected = cminmax_corners(marker_mask, CMinMaxParams(n=4))
    centroid = mask_centroid(marker_mask)
    ordered = order_corners(detected.corners, centroid)

    src = np.array(ordered + (centroid,))
    dst = np.array(CORNER_TARGETS + (_VIRTUAL.centroid,))
    matrix = estimate_homography(src, dst)
    residual = mean_reprojection_error(matrix, src, dst)
    if residual > RESIDUAL_LIMIT:
        raise ResidualTooHighError(
            f"mean fit residual {residual:.4g} exceeds {RESIDUAL_LIMIT}"
        )

    bounds = calibrate_hue_bounds(background, with_pointer, min_area=min_area)
    profile = CalibrationProfile(
        depth_to_rgb=depth_to_rgb,
        hue_bounds=bounds,
        t_rv=Homography(matrix, rho_z),
        camera_height_mm=float(camera_height_mm),
        principal_point=(px, py),
        raw_to_mm=float(raw_to_mm),
    )
    return CalibrationSummary(profile, ordered, centroid, residual)


def build_calibration(
    background: RgbImage,
    with_marker: RgbImage,
    with_pointer: RgbImage,
    *,
    depth_to_rgb: AffineTransform,
    camera_height_mm: float,
    principal_point: Point2,
    rho_z: float,
    raw_to_mm: float = 1.0,
    min_area: int = DEFAULT_MIN_AREA,
) -> CalibrationProfile:
    return calibrate_scene(
        background, with_marker, with_pointer,
        depth_to_rgb=depth_to_rgb,
        camera_height_mm=camera_height_mm,
        principal_point=principal_point,
        rho_z=rho_z,
        raw_to_mm=raw_to_mm,
        min_area=min_area,
    ).profile


def profile_to_dict(profile: CalibrationProfile) -> dict:
    b = profile.hue_bounds
    return {
        "depth_to_rgb": [float(v) for v in profile.depth_to_rgb.matrix.ravel()],
        "hue_bounds": {
            "lo": b.lo,
            "hi": b.hi,
            "wraps": b.wraps,
            "min_saturation": b.min_saturation,
            "min_value": b.min_value,
        },
        "t_rv": [float(v) for v in profile.t_rv.matrix.ravel()],
        "rho_z": float(profile.t_rv.rho_z),
        "camera_height_mm": float(profile.camera_height_mm),
        "principal_point": [float(profile.principal_point[0]),
                            float(profile.principal_point[1])],
        "raw_to_mm": float(profile.raw_to_mm),
    }


def profile_from_dict(data: dict) -> CalibrationProfile:
    bounds = data["hue_bounds"]
    return CalibrationProfile(
        depth_to_rgb=AffineTransform(
            np.asarray(data["depth_to_rgb"], dtype=np.float64).reshape(2, 3)
        ),
        hue_bounds=HueBounds(
            lo=int(bounds["lo"]),
            hi=int(bounds["hi"]),
            wraps=bool(bounds["wraps"]),
            min_saturation=int(bounds["min_saturation"]),
            min_value=int(bounds["min_value"]),
        ),
        t_rv=Homography(
            np.asarray(data["t_rv"], dtype=np.float64).reshape(3, 3),
            float(data["rho_z"]),
        ),
        camera_height_mm=float(data["camera_height_mm"]),
        principal_point=(float(data["principal_point"][0]),
                         float(data["principal_point"][1])),
        raw_to_mm=float(data["raw_to_mm"]),
    )


def save_profile(profile: CalibrationProfile, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(profile_to_dict(profile), f, indent=2)
        f.write("\n")


def load_profile(path) -> CalibrationProfile:
    with open(path, "r", encoding="utf-8") as f:
        return profile_from_dict(json.load(f))
