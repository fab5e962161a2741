"""Pinhole camera model, viewpoint tracks, and per-frame shake."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .seeding import spawn_rng

WORLD_UP = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class CameraConfig:
    position: np.ndarray
    look_at: np.ndarray
    focal_length_px: float
    image_size: tuple[int, int] = (320, 240)  # (width, height)
    mode: str = "fixed"                       # "fixed" | "tracking"
    shake_amplitude: float = 0.0              # meters
    shake_seed: int = 0

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64)
        tgt = np.asarray(self.look_at, dtype=np.float64)
        if pos.shape != (3,) or tgt.shape != (3,):
            raise ValueError("position and look_at must be 3-vectors")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "look_at", tgt)
        if self.focal_length_px <= 0:
            raise ValueError("focal_length_px must be positive")
        w, h = self.image_size
        if w < 32 or h < 32:
            raise ValueError("image dimensions must be at least 32 px")
        if self.mode not in ("fixed", "tracking"):
            raise ValueError(f"unknown camera mode {self.mode!r}")
        if self.shake_amplitude < 0:
            raise ValueError("shake_amplitude must be non-negative")


def camera_basis(camera: CameraConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right, up, forward unit vectors of the camera frame."""
    forward = camera.look_at - camera.position
    n = np.linalg.norm(forward)
    if n < 1e-9:
        raise ValueError("camera position coincides with look_at")
    forward = forward / n
    up_hint = WORLD_UP if abs(forward @ WORLD_UP) < 0.999 else np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up_hint)
    right /= np.linalg.norm(right)
    up = np.cross(right, forward)
    return right, up, forward


def project_point(camera: CameraConfig, world) -> tuple[float, float] | None:
    """Pinhole projection to pixel coordinates; None marks a point behind the camera.

    Points on the optical axis at positive depth land exactly on the image
    center (width/2, height/2). Image v grows downward.
    """
    right, up, forward = camera_basis(camera)
    rel = np.asarray(world, dtype=np.float64) - camera.position
    z = rel @ forward
    if z <= 0.0:
        return None
    w, h = camera.image_size
    u = w / 2.0 + camera.focal_length_px * (rel @ right) / z
    v = h / 2.0 - camera.focal_length_px * (rel @ up) / z
    return (float(u), float(v))


def shake_offset(shake_seed: int, frame_index: int, amplitude: float) -> np.ndarray:
    """Per-frame positional shake, uniform in the cube [-a, a]^3.

    Counter-based seeding on (seed, frame) keeps parallel and serial
    rendering byte-identical.
    """
    if amplitude == 0.0:
        return np.zeros(3)
    rng = spawn_rng("shake", shake_seed, frame_index)
    return rng.uniform(-amplitude, amplitude, size=3)


def sample_camera_track(camera: CameraConfig, num_frames: int,
                        subject_root_per_frame=None) -> list[CameraConfig]:
    """Expand one camera config into a deterministic per-frame list.

    Fixed mode keeps position and look_at constant apart from additive
    shake on the position; tracking mode re-aims look_at at the subject
    root each frame.
    """
    if num_frames < 1:
        raise ValueError("num_frames must be at least 1")
    if camera.mode == "tracking":
        if subject_root_per_frame is None:
            raise ValueError("tracking mode needs subject root positions")
        roots = np.asarray(subject_root_per_frame, dtype=np.float64)
        if roots.shape != (num_frames, 3):
            raise ValueError(f"expected ({num_frames}, 3) subject roots, got {roots.shape}")
    track = []
    for f in range(num_frames):
        offset = shake_offset(camera.shake_seed, f, camera.shake_amplitude)
        look = camera.look_at if camera.mode == "fixed" else roots[f]
        track.append(replace(camera, position=camera.position + offset, look_at=look))
    return track
