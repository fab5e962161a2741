"""Procedural action clips for a built-in humanoid figure.

Eight parameterized actions are provided. Each is a set of periodic joint
rotation programs around a base posture; speed scales the phase rate,
amplitude scales the swing angles, and a per-clip seed jitters phase and
style so no two variants are identical. All motion is generated at 30 fps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seeding import spawn_rng
from .skeleton import (
    MotionClip,
    Pose,
    Joint,
    Skeleton,
    quat_from_axis_angle,
    quat_multiply,
    QUAT_IDENTITY,
)

GENERATED_FPS = 30

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])

_HUMANOID_JOINTS: list[tuple[str, str | None, tuple[float, float, float]]] = [
    ("pelvis", None, (0.0, 0.0, 0.0)),
    ("spine", "pelvis", (0.0, 0.18, 0.0)),
    ("chest", "spine", (0.0, 0.18, 0.0)),
    ("neck", "chest", (0.0, 0.14, 0.0)),
    ("head", "neck", (0.0, 0.16, 0.0)),
    ("l_shoulder", "chest", (0.21, 0.10, 0.0)),
    ("l_elbow", "l_shoulder", (0.30, 0.0, 0.0)),
    ("l_wrist", "l_elbow", (0.27, 0.0, 0.0)),
    ("l_hand", "l_wrist", (0.10, 0.0, 0.0)),
    ("r_shoulder", "chest", (-0.21, 0.10, 0.0)),
    ("r_elbow", "r_shoulder", (-0.30, 0.0, 0.0)),
    ("r_wrist", "r_elbow", (-0.27, 0.0, 0.0)),
    ("r_hand", "r_wrist", (-0.10, 0.0, 0.0)),
    ("l_hip", "pelvis", (0.11, -0.06, 0.0)),
    ("l_knee", "l_hip", (0.0, -0.44, 0.0)),
    ("l_ankle", "l_knee", (0.0, -0.42, 0.0)),
    ("l_foot", "l_ankle", (0.0, -0.04, 0.14)),
    ("r_hip", "pelvis", (-0.11, -0.06, 0.0)),
    ("r_knee", "r_hip", (0.0, -0.44, 0.0)),
    ("r_ankle", "r_knee", (0.0, -0.42, 0.0)),
    ("r_foot", "r_ankle", (0.0, -0.04, 0.14)),
]

ROOT_HEIGHT = 0.98  # pelvis rest height, meters


def build_humanoid() -> Skeleton:
    """The shared 21-joint character used by every procedural action."""
    index = {name: i for i, (name, _, _) in enumerate(_HUMANOID_JOINTS)}
    joints = tuple(
        Joint(name, None if parent is None else index[parent], np.array(offset))
        for name, parent, offset in _HUMANOID_JOINTS
    )
    return Skeleton(joints=joints, root_index=0)


@dataclass(frozen=True)
class ProceduralActionSpec:
    """Parameters of one generated clip."""
    action_name: str
    speed_scale: float = 1.0
    amplitude_scale: float = 1.0
    duration_s: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.action_name not in ACTIONS:
            raise ValueError(f"unknown action {self.action_name!r}; "
                             f"available: {sorted(ACTIONS)}")
        if not (0.5 <= self.speed_scale <= 2.0):
            raise ValueError("speed_scale must lie in [0.5, 2.0]")
        if not (0.5 <= self.amplitude_scale <= 1.5):
            raise ValueError("amplitude_scale must lie in [0.5, 1.5]")
        if not (2.0 <= self.duration_s <= 6.0):
            raise ValueError("duration_s must lie in [2, 6] seconds")


class _PoseProgram:
    """Accumulates per-frame joint rotations and root translation."""

    def __init__(self, skeleton: Skeleton, num_frames: int):
        self.skeleton = skeleton
        self.T = num_frames
        self.rotations = np.tile(QUAT_IDENTITY, (num_frames, skeleton.num_joints, 1))
        self.root_offset = np.zeros((num_frames, 3))

    def rotate(self, joint: str, axis: np.ndarray, degrees) -> None:
        """Compose an extra rotation (per-frame or constant) onto a joint."""
        j = self.skeleton.index_of(joint)
        degrees = np.broadcast_to(np.asarray(degrees, dtype=np.float64), (self.T,))
        for t in range(self.T):
            q = quat_from_axis_angle(axis, math.radians(degrees[t]))
            self.rotations[t, j] = quat_multiply(self.rotations[t, j], q)

    def poses(self) -> tuple[Pose, ...]:
        base = np.array([0.0, ROOT_HEIGHT, 0.0])
        return tuple(
            Pose(base + self.root_offset[t], self.rotations[t])
            for t in range(self.T)
        )


def _arms_down(prog: _PoseProgram, left_deg: float = -68.0, right_deg: float = 68.0):
    prog.rotate("l_shoulder", _Z, left_deg)
    prog.rotate("r_shoulder", _Z, right_deg)


def _wave(prog, phase, amp, rng):
    _arms_down(prog, left_deg=-68.0 + rng.uniform(-4, 4))
    prog.rotate("r_shoulder", _Z, -55.0)           # raise the waving arm
    prog.rotate("r_elbow", _Z, 35.0 * amp * np.sin(phase))
    prog.rotate("head", _Z, 4.0 * amp * np.sin(phase * 0.5))


def _jump(prog, phase, amp, rng):
    _arms_down(prog)
    lift = 0.17 * amp * np.sin(0.5 * phase) ** 2
    prog.root_offset[:, 1] = lift
    crouch = 28.0 * amp * np.cos(0.5 * phase) ** 2
    for side in ("l", "r"):
        prog.rotate(f"{side}_hip", _X, -crouch)
        prog.rotate(f"{side}_knee", _X, 1.9 * crouch)
        prog.rotate(f"{side}_ankle", _X, -0.9 * crouch)
        prog.rotate(f"{side}_shoulder", _X, -20.0 * amp * np.sin(0.5 * phase) ** 2)


def _squat(prog, phase, amp, rng):
    _arms_down(prog, left_deg=-30.0, right_deg=30.0)
    depth = 0.5 - 0.5 * np.cos(phase)
    prog.root_offset[:, 1] = -0.26 * amp * depth
    for side in ("l", "r"):
        prog.rotate(f"{side}_hip", _X, -55.0 * amp * depth)
        prog.rotate(f"{side}_knee", _X, 95.0 * amp * depth)
        prog.rotate(f"{side}_ankle", _X, -35.0 * amp * depth)
    prog.rotate("spine", _X, -12.0 * amp * depth)


def _run_in_place(prog, phase, amp, rng):
    _arms_down(prog)
    swing = np.sin(phase)
    prog.root_offset[:, 1] = 0.03 * amp * np.sin(2.0 * phase) ** 2
    for side, sign in (("l", 1.0), ("r", -1.0)):
        prog.rotate(f"{side}_hip", _X, -32.0 * amp * np.maximum(sign * swing, -0.35))
        prog.rotate(f"{side}_knee", _X, 55.0 * amp * np.maximum(sign * swing, 0.0) + 12.0)
        prog.rotate(f"{side}_shoulder", _X, -25.0 * amp * sign * swing)
        prog.rotate(f"{side}_elbow", _Z, -70.0 * sign)


def _punch(prog, phase, amp, rng):
    _arms_down(prog, left_deg=-45.0, right_deg=45.0)
    for side, sign, off in (("r", -1.0, 0.0), ("l", 1.0, math.pi)):
        pulse = np.maximum(0.0, np.sin(phase + off)) ** 2
        prog.rotate(f"{side}_shoulder", _Y, sign * (15.0 + 55.0 * amp * pulse))
        prog.rotate(f"{side}_elbow", _Y, sign * 85.0 * amp * (1.0 - pulse))
    prog.rotate("chest", _Y, 10.0 * amp * np.sin(phase))


def _kick(prog, phase, amp, rng):
    _arms_down(prog, left_deg=-50.0, right_deg=50.0)
    pulse = np.maximum(0.0, np.sin(phase)) ** 2
    prog.rotate("r_hip", _X, -46.0 * amp * pulse)
    prog.rotate("r_knee", _X, 32.0 * amp * (1.0 - pulse) + 8.0)
    prog.rotate("l_shoulder", _X, -18.0 * amp * pulse)
    prog.rotate("spine", _X, 8.0 * amp * pulse)


def _bow(prog, phase, amp, rng):
    _arms_down(prog, left_deg=-75.0, right_deg=75.0)
    bend = 0.5 - 0.5 * np.cos(phase)
    prog.rotate("spine", _X, -26.0 * amp * bend)
    prog.rotate("chest", _X, -22.0 * amp * bend)
    prog.rotate("neck", _X, -12.0 * amp * bend)
    prog.root_offset[:, 1] = -0.04 * amp * bend


def _spin(prog, phase, amp, rng):
    _arms_down(prog, left_deg=-40.0, right_deg=40.0)
    # phase itself is the yaw angle source: one turn per base period
    prog.rotate("pelvis", _Y, np.degrees(phase))
    prog.rotate("l_elbow", _Z, -15.0 * amp * np.sin(phase))
    prog.rotate("r_elbow", _Z, 15.0 * amp * np.sin(phase))


# name -> (builder, base frequency in Hz, supports a second actor)
ACTIONS: dict[str, tuple] = {
    "wave": (_wave, 1.0, False),
    "jump": (_jump, 0.8, False),
    "squat": (_squat, 0.6, False),
    "run_in_place": (_run_in_place, 1.3, False),
    "punch": (_punch, 1.0, True),
    "kick": (_kick, 0.7, False),
    "bow": (_bow, 0.5, True),
    "spin": (_spin, 0.5, True),
}

TWO_PERSON_ACTIONS = frozenset(n for n, (_, _, two) in ACTIONS.items() if two)


def _single_track(spec: ProceduralActionSpec, jitter_key: str) -> tuple[Pose, ...]:
    builder, base_freq, _ = ACTIONS[spec.action_name]
    num_frames = round(spec.duration_s * GENERATED_FPS)
    t = np.arange(num_frames) / GENERATED_FPS
    rng = spawn_rng("action", spec.action_name, spec.seed, jitter_key)
    phase0 = rng.uniform(0.15, 0.85) * math.pi
    phase = 2.0 * math.pi * base_freq * spec.speed_scale * t + phase0
    skeleton = build_humanoid()
    prog = _PoseProgram(skeleton, num_frames)
    builder(prog, phase, spec.amplitude_scale, rng)
    return prog.poses()


def generate_procedural_clip(spec: ProceduralActionSpec,
                             actor_count: int = 1) -> MotionClip:
    """Generate a deterministic clip for the given spec.

    Frame count is round(duration_s * 30). Two-actor clips place the second
    figure 1.0 m to the side, turned to face the first, running the same
    action with independently jittered phase.
    """
    if actor_count == 2 and spec.action_name not in TWO_PERSON_ACTIONS:
        raise ValueError(f"action {spec.action_name!r} is not a two-person action")
    frames = _single_track(spec, "a")
    frames_b = None
    if actor_count == 2:
        raw = _single_track(spec, "b")
        turn = quat_from_axis_angle(_Y, math.pi)
        shifted = []
        for pose in raw:
            rot = pose.joint_rotations.copy()
            rot[0] = quat_multiply(turn, rot[0])
            shifted.append(Pose(pose.root_translation + np.array([1.0, 0.0, 0.0]), rot))
        frames_b = tuple(shifted)
    return MotionClip(
        skeleton_id="humanoid",
        fps=GENERATED_FPS,
        frames=frames,
        action_label=spec.action_name,
        variant_id=spec.seed & 0x7FFFFFFF,
        actor_count=actor_count,
        frames_b=frames_b,
    )
