import json
import subprocess
import sys

import numpy as np
import pytest

from tangible_tracker.registration import calibrate_scene
from tangible_tracker.simulator import (
    SceneSpec,
    circular_trajectory,
    depth_alignment,
    render_rgb,
    render_sequence,
)


def render_calibration_trio(spec: SceneSpec):
    """The three initialization captures for a scene."""
    rng = np.random.default_rng(spec.seed)
    background = render_rgb(spec, rng, with_marker=False, with_ball=False)
    with_marker = render_rgb(spec, np.random.default_rng(spec.seed),
                             with_marker=True, with_ball=False)
    with_pointer = render_rgb(spec, np.random.default_rng(spec.seed),
                              with_marker=False, with_ball=True)
    return background, with_marker, with_pointer


def calibrate_spec(spec: SceneSpec):
    background, with_marker, with_pointer = render_calibration_trio(spec)
    return calibrate_scene(
        background, with_marker, with_pointer,
        depth_to_rgb=depth_alignment(spec),
        camera_height_mm=spec.camera_height_mm,
        principal_point=spec.principal_point,
        rho_z=spec.rho_z,
        raw_to_mm=spec.raw_to_mm,
    )


@pytest.fixture(scope="session")
def default_spec() -> SceneSpec:
    return SceneSpec()


@pytest.fixture(scope="session")
def default_summary(default_spec):
    return calibrate_spec(default_spec)


@pytest.fixture(scope="session")
def sequence_dir(tmp_path_factory):
    """100-frame circular sequence with mild hue and depth jitter."""
    out = tmp_path_factory.mktemp("sequence")
    spec = SceneSpec(hue_jitter=3, depth_jitter=3, seed=11)
    trajectory = circular_trajectory(100, radius_mm=60.0, height_mm=120.0,
                                     height_amp_mm=40.0)
    render_sequence(spec, trajectory, out)
    return out


@pytest.fixture(scope="session")
def sequence_profile_path(sequence_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("profile") / "profile.json"
    rc = subprocess.run(
        [sys.executable, "-m", "tangible_tracker", "calibrate",
         "--background", str(sequence_dir / "background.ppm"),
         "--with-marker", str(sequence_dir / "with_marker.ppm"),
         "--with-pointer", str(sequence_dir / "with_pointer.ppm"),
         "--depth-to-rgb", "1,0,4,0,1,2",
         "--camera-height", "600",
         "--principal-point", "319.5,239.5",
         "--rho-z", "0.002",
         "--out", str(out)],
        capture_output=True, text=True)
    assert rc.returncode == 0, rc.stderr
    return out


@pytest.fixture(scope="session")
def tracked_run(sequence_dir, sequence_profile_path):
    """One full CLI track run over the jittered sequence.

    Returns (records, fps_report, truth) parsed from stdout and truth.json.
    """
    proc = subprocess.run(
        [sys.executable, "-m", "tangible_tracker", "track",
         "--calib", str(sequence_profile_path),
         "--frames", str(sequence_dir),
         "--fps-report"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.strip().splitlines()
    records = [json.loads(line) for line in lines[:-1]]
    fps_report = json.loads(lines[-1])
    with open(sequence_dir / "truth.json", "r", encoding="utf-8") as f:
        truth = json.load(f)
    return records, fps_report, truth
