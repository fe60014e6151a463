"""Synthetic RGB-D scenes with exact geometric ground truth.

The renderer projects a colored ball above a projectively warped reference
rectangle using the same pinhole geometry the tracker later inverts, but
through an independent forward code path, so full-pipeline round trips are
meaningful checks rather than tautologies. Anti-aliasing is deliberately
absent: hard edges keep the mask oracles exact.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import pnm
from .imaging import AffineTransform, BinaryMask, DepthImage, Point2, Point3, RgbImage

RGB_NAME = "rgb_%04d.ppm"
DEPTH_NAME = "depth_%04d.pgm"
TRUTH_NAME = "truth.json"
CALIBRATION_IMAGES = (
    "background.ppm",
    "with_marker.ppm",
    "with_pointer.ppm",
    "background_depth.pgm",
    "with_pointer_depth.pgm",
)


@dataclass(frozen=True, eq=False)
class SceneSpec:
    """Complete description of one synthetic capture rig and scene."""

    width: int = 640
    height: int = 480
    camera_height_mm: float = 600.0
    principal_point: Point2 | None = None  # image center when omitted
    marker_size_mm: tuple[float, float] = (100.0, 150.0)
    marker_to_image: np.ndarray | None = None  # plane mm -> image px; default 2 px/mm centered
    marker_color: tuple[int, int, int] = (45, 45, 45)
    background_color: tuple[int, int, int] = (190, 190, 190)
    ball_plane_mm: Point2 = (30.0, 40.0)
    ball_height_mm: float = 120.0
    ball_radius_mm: float = 20.0
    ball_hue: int = 20
    ball_saturation: int = 200
    ball_value: int = 230
    rho_z: float = 0.002
    raw_to_mm: float = 1.0
    depth_frame_offset: tuple[int, int] = (4, 2)
    shadow_offset_px: tuple[float, float] = (8.0, 0.0)
    hue_jitter: int = 0
    depth_jitter: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("scene must be at least 16x16")
        if not self.camera_height_mm > 0:
            raise ValueError("camera_height_mm must be positive")
        if not 0 <= self.ball_height_mm < self.camera_height_mm:
            raise ValueError("ball height must satisfy 0 <= h < camera height")
        if not self.ball_radius_mm > 0:
            raise ValueError("ball radius must be positive")
        if not (0 <= self.ball_hue < 180):
            raise ValueError("ball hue must be < 180")
        if not self.rho_z > 0:
            raise ValueError("rho_z must be positive")
        if not self.raw_to_mm > 0:
            raise ValueError("raw_to_mm must be positive")
        if self.hue_jitter < 0 or self.depth_jitter < 0:
            raise ValueError("jitter amplitudes must be non-negative")
        if self.principal_point is None:
            object.__setattr__(
                self, "principal_point",
                ((self.width - 1) / 2.0, (self.height - 1) / 2.0),
            )
        if self.marker_to_image is None:
            m = np.array([[2.0, 0.0, self.principal_point[0]],
                          [0.0, 2.0, self.principal_point[1]],
                          [0.0, 0.0, 1.0]])
        else:
            m = np.asarray(self.marker_to_image, dtype=np.float64).reshape(3, 3)
        if np.linalg.det(m) == 0.0:
            raise ValueError("marker homography must be invertible")
        object.__setattr__(self, "marker_to_image", m)
        corners = apply_projective(m, marker_plane_corners(self))
        if not np.isfinite(corners).all() or not _is_strictly_convex(corners):
            raise ValueError("marker corners must be finite and in convex position")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Analytic scene quantities every pipeline stage is checked against."""

    marker_corners_px: np.ndarray  # (4, 2), same order as the plane rectangle
    marker_centroid_px: Point2
    ball_center_px: Point2  # observed pixel B
    ball_plane_px: Point2   # plane footprint A
    ball_real_mm: Point3
    expected_virtual: Point3
    t_rv_true: np.ndarray
    rho_z_true: float


def marker_plane_corners(spec: SceneSpec) -> np.ndarray:
    """Rectangle corners in plane mm, ordered TL, BL, BR, TR (plane y down)."""
    hw = spec.marker_size_mm[0] / 2.0
    hh = spec.marker_size_mm[1] / 2.0
    return np.array([[-hw, -hh], [-hw, hh], [hw, hh], [hw, -hh]])


def apply_projective(h: np.ndarray, pts) -> np.ndarray:
    p = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    mapped = np.hstack([p, np.ones((len(p), 1))]) @ np.asarray(h).T
    return mapped[:, :2] / mapped[:, 2:3]


def _is_strictly_convex(corners: np.ndarray) -> bool:
    n = len(corners)
    signs = []
    for i in range(n):
        a = corners[i]
        b = corners[(i + 1) % n]
        c = corners[(i + 2) % n]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if cross == 0:
            return False
        signs.append(cross > 0)
    return all(signs) or not any(signs)


def virtual_of_plane(spec: SceneSpec, plane_pt) -> Point2:
    """Map a plane point (mm) into virtual units off the marker size."""
    mw, mh = spec.marker_size_mm
    return (float(plane_pt[0]) / mw, 1.5 * float(plane_pt[1]) / mh)


def true_t_rv(spec: SceneSpec) -> np.ndarray:
    mw, mh = spec.marker_size_mm
    to_virtual = np.array([[1.0 / mw, 0.0, 0.0],
                           [0.0, 1.5 / mh, 0.0],
                           [0.0, 0.0, 1.0]])
    t = to_virtual @ np.linalg.inv(spec.marker_to_image)
    return t / t[2, 2]


def _local_scale(h: np.ndarray, p) -> float:
    """Isotropic magnification of the projective map at a plane point."""
    x, y = float(p[0]), float(p[1])
    w = h[2, 0] * x + h[2, 1] * y + h[2, 2]
    nx = h[0, 0] * x + h[0, 1] * y + h[0, 2]
    ny = h[1, 0] * x + h[1, 1] * y + h[1, 2]
    j = np.array([
        [h[0, 0] * w - h[2, 0] * nx, h[0, 1] * w - h[2, 1] * nx],
        [h[1, 0] * w - h[2, 0] * ny, h[1, 1] * w - h[2, 1] * ny],
    ]) / (w * w)
    return math.sqrt(abs(np.linalg.det(j)))


def ball_geometry(spec: SceneSpec) -> tuple[Point2, Point2, float]:
    """(plane footprint A, observed center B, rendered radius) in pixels.

    A ball at height h over plane point P appears at
    B = O + (A - O) * H / (H - h) with its radius magnified the same way.
    """
    a = apply_projective(spec.marker_to_image, [spec.ball_plane_mm])[0]
    ox, oy = spec.principal_point
    lift = spec.camera_height_mm / (spec.camera_height_mm - spec.ball_height_mm)
    b = (ox + (a[0] - ox) * lift, oy + (a[1] - oy) * lift)
    radius = spec.ball_radius_mm * _local_scale(spec.marker_to_image, spec.ball_plane_mm) * lift
    return (float(a[0]), float(a[1])), b, radius


def fill_convex_polygon(width: int, height: int, corners) -> BinaryMask:
    """Rasterize a convex polygon over pixel centers, boundary inclusive."""
    pts = np.asarray(corners, dtype=np.float64)
    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    area2 = 0.0
    n = len(pts)
    for i in range(n):
        j = (i + 1) % n
        area2 += pts[i, 0] * pts[j, 1] - pts[j, 0] * pts[i, 1]
    orient = 1.0 if area2 > 0 else -1.0
    inside = np.ones((height, width), dtype=bool)
    for i in range(n):
        j = (i + 1) % n
        cross = (pts[j, 0] - pts[i, 0]) * (ys - pts[i, 1]) \
            - (pts[j, 1] - pts[i, 1]) * (xs - pts[i, 0])
        inside &= orient * cross >= 0
    return BinaryMask(inside)


def _fill_disc(width: int, height: int, center, radius: float) -> np.ndarray:
    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    return (xs - center[0]) ** 2 + (ys - center[1]) ** 2 <= radius * radius


def hsv_to_rgb_bins(h, s, v) -> np.ndarray:
    """Inverse hexcone for hue on the 0..179 scale; inputs broadcast."""
    hdeg = np.asarray(h, dtype=np.float64) * 2.0
    s = np.asarray(s, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    c = v * s / 255.0
    sector = hdeg / 60.0
    x = c * (1.0 - np.abs(np.mod(sector, 2.0) - 1.0))
    m = v - c
    zeros = np.zeros_like(c)
    idx = np.floor(sector).astype(int) % 6
    r = np.choose(idx, [c, x, zeros, zeros, x, c])
    g = np.choose(idx, [x, c, c, x, zeros, zeros])
    b = np.choose(idx, [zeros, zeros, x, c, c, x])
    rgb = np.stack([r + m, g + m, b + m], axis=-1)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def render_rgb(spec: SceneSpec, rng: np.random.Generator, *,
               with_marker: bool, with_ball: bool) -> RgbImage:
    canvas = np.empty((spec.height, spec.width, 3), dtype=np.uint8)
    canvas[:, :] = spec.background_color
    if with_marker:
        corners = apply_projective(spec.marker_to_image, marker_plane_corners(spec))
        canvas[fill_convex_polygon(spec.width, spec.height, corners).bits] = spec.marker_color
    if with_ball:
        _, b, radius = ball_geometry(spec)
        disc = _fill_disc(spec.width, spec.height, b, radius)
        count = int(disc.sum())
        hues = np.full(count, spec.ball_hue, dtype=np.int64)
        if spec.hue_jitter > 0:
            hues = (hues + rng.integers(-spec.hue_jitter, spec.hue_jitter + 1,
                                        size=count)) % 180
        sats = np.full(count, spec.ball_saturation)
        vals = np.full(count, spec.ball_value)
        canvas[disc] = hsv_to_rgb_bins(hues, sats, vals)
    return RgbImage(canvas)


def render_depth_rgb_frame(spec: SceneSpec, rng: np.random.Generator, *,
                           with_ball: bool) -> np.ndarray:
    """Raw depth as seen from the RGB frame, before the depth-camera shift."""
    plane_raw = int(round(spec.camera_height_mm / spec.raw_to_mm))
    canvas = np.full((spec.height, spec.width), plane_raw, dtype=np.int64)
    if with_ball:
        _, b, radius = ball_geometry(spec)
        ball_raw = max(1, int(round(
            (spec.camera_height_mm - spec.ball_height_mm) / spec.raw_to_mm)))
        shadow_center = (b[0] + spec.shadow_offset_px[0],
                         b[1] + spec.shadow_offset_px[1])
        canvas[_fill_disc(spec.width, spec.height, shadow_center, radius)] = 0
        canvas[_fill_disc(spec.width, spec.height, b, radius)] = ball_raw
    if spec.depth_jitter > 0:
        jitter = rng.integers(-spec.depth_jitter, spec.depth_jitter + 1,
                              size=canvas.shape)
        lit = canvas > 0
        canvas[lit] = np.clip(canvas[lit] + jitter[lit], 1, 65535)
    return np.clip(canvas, 0, 65535).astype(np.uint16)


def _shift_to_depth_frame(plane: np.ndarray, offset: tuple[int, int]) -> np.ndarray:
    """The depth camera sees the scene displaced by the frame offset;
    pixels with no counterpart read 0 (no return)."""
    dx, dy = int(offset[0]), int(offset[1])
    h, w = plane.shape
    out = np.zeros_like(plane)
    x0, x1 = max(0, -dx), min(w, w - dx)
    y0, y1 = max(0, -dy), min(h, h - dy)
    if x1 > x0 and y1 > y0:
        out[y0:y1, x0:x1] = plane[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
    return out


def depth_alignment(spec: SceneSpec) -> AffineTransform:
    """Affine mapping depth-frame pixels back into RGB-frame pixels."""
    dx, dy = spec.depth_frame_offset
    return AffineTransform(np.array([[1.0, 0.0, float(dx)],
                                     [0.0, 1.0, float(dy)]]))


def scene_truth(spec: SceneSpec) -> GroundTruth:
    corners = apply_projective(spec.marker_to_image, marker_plane_corners(spec))
    centroid = apply_projective(spec.marker_to_image, [(0.0, 0.0)])[0]
    a, b, _ = ball_geometry(spec)
    vx, vy = virtual_of_plane(spec, spec.ball_plane_mm)
    return GroundTruth(
        marker_corners_px=corners,
        marker_centroid_px=(float(centroid[0]), float(centroid[1])),
        ball_center_px=b,
        ball_plane_px=a,
        ball_real_mm=(spec.ball_plane_mm[0], spec.ball_plane_mm[1],
                      spec.ball_height_mm),
        expected_virtual=(vx, vy, spec.rho_z * spec.ball_height_mm),
        t_rv_true=true_t_rv(spec),
        rho_z_true=spec.rho_z,
    )


def render_scene(spec: SceneSpec) -> tuple[RgbImage, DepthImage, GroundTruth]:
    """One frame: RGB, depth (in the depth-camera frame), and ground truth.

    Deterministic given the spec's seed.
    """
    rng = np.random.default_rng(spec.seed)
    rgb = render_rgb(spec, rng, with_marker=True, with_ball=True)
    raw = render_depth_rgb_frame(spec, rng, with_ball=True)
    shifted = _shift_to_depth_frame(raw, spec.depth_frame_offset)
    return rgb, DepthImage(shifted, spec.raw_to_mm), scene_truth(spec)


def circular_trajectory(frames: int, radius_mm: float = 60.0,
                        height_mm: float = 120.0,
                        height_amp_mm: float = 40.0) -> list[Point3]:
    """Ball path on a plane circle with a gently varying height."""
    out = []
    for i in range(frames):
        phase = 2.0 * math.pi * i / max(frames, 1)
        out.append((radius_mm * math.cos(phase),
                    radius_mm * math.sin(phase),
                    height_mm + height_amp_mm * math.sin(2.0 * phase)))
    return out


def render_sequence(spec: SceneSpec, trajectory, out_dir) -> str:
    """Write calibration images, per-frame captures, and truth.json.

    Calibration files: background, marker-only, and pointer-only RGB plus
    the empty-scene and pointer-scene depth captures. Frame files follow
    rgb_%04d.ppm / depth_%04d.pgm. Returns the truth.json path.
    """
    trajectory = [(float(x), float(y), float(h)) for x, y, h in trajectory]
    for x, y, h in trajectory:
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(h)):
            raise ValueError("trajectory points must be finite")
        if not 0 <= h < spec.camera_height_mm:
            raise ValueError(
                f"trajectory height {h} outside [0, {spec.camera_height_mm})"
            )

    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    pnm.write_ppm(os.path.join(out_dir, "background.ppm"),
                  render_rgb(spec, rng, with_marker=False, with_ball=False))
    pnm.write_ppm(os.path.join(out_dir, "with_marker.ppm"),
                  render_rgb(spec, np.random.default_rng(spec.seed),
                             with_marker=True, with_ball=False))
    pnm.write_ppm(os.path.join(out_dir, "with_pointer.ppm"),
                  render_rgb(spec, np.random.default_rng(spec.seed),
                             with_marker=False, with_ball=True))
    pnm.write_pgm(os.path.join(out_dir, "background_depth.pgm"),
                  _shift_to_depth_frame(
                      render_depth_rgb_frame(spec, np.random.default_rng(spec.seed),
                                             with_ball=False),
                      spec.depth_frame_offset))
    pnm.write_pgm(os.path.join(out_dir, "with_pointer_depth.pgm"),
                  _shift_to_depth_frame(
                      render_depth_rgb_frame(spec, np.random.default_rng(spec.seed),
                                             with_ball=True),
                      spec.depth_frame_offset))

    frames = []
    for idx, (x, y, h) in enumerate(trajectory):
        sub = dataclasses.replace(spec, ball_plane_mm=(x, y), ball_height_mm=h,
                                  seed=spec.seed + idx)
        rgb, depth, truth = render_scene(sub)
        pnm.write_ppm(os.path.join(out_dir, RGB_NAME % idx), rgb)
        pnm.write_depth(os.path.join(out_dir, DEPTH_NAME % idx), depth)
        frames.append({
            "idx": idx,
            "marker_corners": [[float(cx), float(cy)]
                               for cx, cy in truth.marker_corners_px],
            "ball_px": [truth.ball_center_px[0], truth.ball_center_px[1]],
            "ball_plane_px": [truth.ball_plane_px[0], truth.ball_plane_px[1]],
            "ball_real": list(truth.ball_real_mm),
            "virtual": list(truth.expected_virtual),
        })

    truth_doc = {
        "h_mm": float(spec.camera_height_mm),
        "principal_point": [float(spec.principal_point[0]),
                            float(spec.principal_point[1])],
        "rho_z": float(spec.rho_z),
        "t_rv": [float(v) for v in true_t_rv(spec).ravel()],
        "frames": frames,
    }
    truth_path = os.path.join(out_dir, TRUTH_NAME)
    with open(truth_path, "w", encoding="utf-8") as f:
        json.dump(truth_doc, f, indent=2)
        f.write("\n")
    return truth_path


def random_quadrangle_scene(width: int, height: int,
                            rng: np.random.Generator) -> tuple[BinaryMask, np.ndarray]:
    """Random mildly perspective-warped rectangle with exact vertex truth.

    Rejection-samples until the quadrangle is comfortably convex, fully in
    frame, and free of razor-thin angles that rasterize ambiguously.
    """
    for _ in range(500):
        rw = width * rng.uniform(0.18, 0.30)
        rh = height * rng.uniform(0.18, 0.30)
        theta = rng.uniform(-0.5, 0.5)
        cx = width / 2.0 + rng.uniform(-0.08, 0.08) * width
        cy = height / 2.0 + rng.uniform(-0.08, 0.08) * height
        g = rng.uniform(-1.0, 1.0, size=2) * (0.25 / max(width, height))
        c, s = math.cos(theta), math.sin(theta)
        h = np.array([[c, -s, cx], [s, c, cy], [g[0], g[1], 1.0]])
        base = np.array([[-rw, -rh], [-rw, rh], [rw, rh], [rw, -rh]])
        corners = apply_projective(h, base)
        if not np.isfinite(corners).all():
            continue
        if corners[:, 0].min() < 8 or corners[:, 0].max() > width - 9:
            continue
        if corners[:, 1].min() < 8 or corners[:, 1].max() > height - 9:
            continue
        if not _is_strictly_convex(corners):
            continue
        ok = True
        for i in range(4):
            prev = corners[(i - 1) % 4] - corners[i]
            nxt = corners[(i + 1) % 4] - corners[i]
            if min(np.hypot(*prev), np.hypot(*nxt)) < 40:
                ok = False
                break
            cos_a = np.dot(prev, nxt) / (np.hypot(*prev) * np.hypot(*nxt))
            angle = math.degrees(math.acos(np.clip(cos_a, -1.0, 1.0)))
            if not 35.0 <= angle <= 145.0:
                ok = False
                break
        if not ok:
            continue
        return fill_convex_polygon(width, height, corners), corners
    raise RuntimeError("failed to sample a usable quadrangle")


def spec_to_dict(spec: SceneSpec) -> dict:
    return {
        "width": spec.width,
        "height": spec.height,
        "camera_height_mm": spec.camera_height_mm,
        "principal_point": list(spec.principal_point),
        "marker_size_mm": list(spec.marker_size_mm),
        "marker_to_image": [float(v) for v in spec.marker_to_image.ravel()],
        "marker_color": list(spec.marker_color),
        "background_color": list(spec.background_color),
        "ball_plane_mm": list(spec.ball_plane_mm),
        "ball_height_mm": spec.ball_height_mm,
        "ball_radius_mm": spec.ball_radius_mm,
        "ball_hue": spec.ball_hue,
        "ball_saturation": spec.ball_saturation,
        "ball_value": spec.ball_value,
        "rho_z": spec.rho_z,
        "raw_to_mm": spec.raw_to_mm,
        "depth_frame_offset": list(spec.depth_frame_offset),
        "shadow_offset_px": list(spec.shadow_offset_px),
        "hue_jitter": spec.hue_jitter,
        "depth_jitter": spec.depth_jitter,
        "seed": spec.seed,
    }


def spec_from_dict(data: dict) -> SceneSpec:
    kwargs = dict(data)
    for key in ("principal_point", "marker_size_mm", "marker_color",
                "background_color", "ball_plane_mm", "depth_frame_offset",
                "shadow_offset_px"):
        if key in kwargs and kwargs[key] is not None:
            kwargs[key] = tuple(kwargs[key])
    unknown = set(kwargs) - {f.name for f in dataclasses.fields(SceneSpec)}
    if unknown:
        raise ValueError(f"unknown scene fields: {sorted(unknown)}")
    return SceneSpec(**kwargs)
