"""Articulated skeletons, poses, and forward kinematics.

Rotations are stored as unit quaternions (w, x, y, z) throughout; Euler
angles only appear at the BVH boundary, where the file declares its own
rotation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

QUAT_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero quaternion")
    return q / n


def quat_from_axis_angle(axis, angle_rad: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = float(np.linalg.norm(axis))
    if n < 1e-12:
        raise ValueError("rotation axis must be nonzero")
    half = 0.5 * float(angle_rad)
    w = np.cos(half)
    xyz = np.sin(half) * (axis / n)
    return np.array([w, xyz[0], xyz[1], xyz[2]])


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product; quat_to_matrix(a @ b) == quat_to_matrix(a) @ quat_to_matrix(b)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


_AXES = {"X": np.array([1.0, 0.0, 0.0]),
         "Y": np.array([0.0, 1.0, 0.0]),
         "Z": np.array([0.0, 0.0, 1.0])}


def quat_from_euler(order: str, angles_deg) -> np.ndarray:
    """Compose intrinsic rotations applied in the given axis order.

    ``order`` is a string like "ZXY"; ``angles_deg`` aligns with it. The
    resulting rotation matrix is R(order[0]) @ R(order[1]) @ R(order[2]).
    """
    if len(order) != len(angles_deg):
        raise ValueError("axis order and angle count differ")
    q = QUAT_IDENTITY
    for axis_name, angle in zip(order, angles_deg):
        try:
            axis = _AXES[axis_name]
        except KeyError:
            raise ValueError(f"unknown rotation axis {axis_name!r}") from None
        q = quat_multiply(q, quat_from_axis_angle(axis, np.deg2rad(float(angle))))
    return quat_normalize(q)


def matrix_to_euler_zxy(m: np.ndarray) -> tuple[float, float, float]:
    """Extract intrinsic Z, X, Y angles (degrees) with R = Rz @ Rx @ Ry."""
    # R = Rz Rx Ry gives m[2,1] = sin(x)
    sx = float(np.clip(m[2, 1], -1.0, 1.0))
    x = np.arcsin(sx)
    if abs(sx) < 1.0 - 1e-9:
        z = np.arctan2(-m[0, 1], m[1, 1])
        y = np.arctan2(-m[2, 0], m[2, 2])
    else:
        # gimbal lock: fold y into z
        z = np.arctan2(m[1, 0], m[0, 0])
        y = 0.0
    return float(np.rad2deg(z)), float(np.rad2deg(x)), float(np.rad2deg(y))


@dataclass(frozen=True)
class Joint:
    """One joint: a named offset hanging off a parent joint (None for the root)."""
    name: str
    parent: int | None
    offset: np.ndarray

    def __post_init__(self):
        if not self.name:
            raise ValueError("joint name must be non-empty")
        off = np.asarray(self.offset, dtype=np.float64)
        if off.shape != (3,) or not np.all(np.isfinite(off)):
            raise ValueError(f"joint {self.name!r}: offset must be a finite 3-vector")
        object.__setattr__(self, "offset", off)


@dataclass(frozen=True)
class Skeleton:
    """Joint tree in traversal order; every non-root parent index precedes its child."""
    joints: tuple[Joint, ...]
    root_index: int = 0

    def __post_init__(self):
        joints = tuple(self.joints)
        object.__setattr__(self, "joints", joints)
        if len(joints) < 2:
            raise ValueError("skeleton needs at least 2 joints")
        if not (0 <= self.root_index < len(joints)):
            raise ValueError("root_index out of range")
        names = set()
        for i, j in enumerate(joints):
            if j.name in names:
                raise ValueError(f"duplicate joint name {j.name!r}")
            names.add(j.name)
            if i == self.root_index:
                if j.parent is not None:
                    raise ValueError("root joint must have no parent")
            else:
                if j.parent is None or not (0 <= j.parent < i):
                    raise ValueError(
                        f"joint {j.name!r}: parent must precede it in traversal order")

    @property
    def num_joints(self) -> int:
        return len(self.joints)

    def index_of(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(name)

    def bones(self) -> list[tuple[int, int]]:
        """(parent, child) index pairs, one per non-root joint."""
        return [(j.parent, i) for i, j in enumerate(self.joints) if j.parent is not None]


@dataclass(frozen=True)
class Pose:
    """Root translation plus one unit quaternion per joint."""
    root_translation: np.ndarray
    joint_rotations: np.ndarray  # (J, 4), unit (w, x, y, z)

    def __post_init__(self):
        t = np.asarray(self.root_translation, dtype=np.float64)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise ValueError("root_translation must be a finite 3-vector")
        r = np.asarray(self.joint_rotations, dtype=np.float64)
        if r.ndim != 2 or r.shape[1] != 4:
            raise ValueError("joint_rotations must have shape (J, 4)")
        norms = np.linalg.norm(r, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("joint rotations must be unit quaternions (within 1e-6)")
        object.__setattr__(self, "root_translation", t)
        object.__setattr__(self, "joint_rotations", r)

    @classmethod
    def identity(cls, num_joints: int, root_translation=(0.0, 0.0, 0.0)) -> "Pose":
        rot = np.tile(QUAT_IDENTITY, (num_joints, 1))
        return cls(np.asarray(root_translation, dtype=np.float64), rot)


@dataclass(frozen=True)
class MotionClip:
    """A pose track at fixed fps; two-actor clips carry a second track in frames_b."""
    skeleton_id: str
    fps: int
    frames: tuple[Pose, ...]
    action_label: str
    variant_id: int = 0
    actor_count: int = 1
    frames_b: tuple[Pose, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if not self.frames:
            raise ValueError("clip has no frames")
        if self.actor_count not in (1, 2):
            raise ValueError("actor_count must be 1 or 2")
        if self.actor_count == 2:
            if self.frames_b is None:
                raise ValueError("two-actor clip needs a second pose track")
            object.__setattr__(self, "frames_b", tuple(self.frames_b))
            if len(self.frames_b) != len(self.frames):
                raise ValueError("second pose track length mismatch")
        elif self.frames_b is not None:
            raise ValueError("frames_b present on a single-actor clip")

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def duration_s(self) -> float:
        return len(self.frames) / self.fps


def forward_kinematics(skeleton: Skeleton, pose: Pose) -> np.ndarray:
    """World positions of all joints, shape (J, 3).

    Deterministic: position(j) = world transform of parent applied to
    offset(j); the root sits at pose.root_translation.
    """
    J = skeleton.num_joints
    if pose.joint_rotations.shape[0] != J:
        raise ValueError(
            f"pose has {pose.joint_rotations.shape[0]} rotations, skeleton has {J} joints")
    positions = np.zeros((J, 3))
    world_rot = np.zeros((J, 3, 3))
    for i, joint in enumerate(skeleton.joints):
        local = quat_to_matrix(pose.joint_rotations[i])
        if joint.parent is None:
            positions[i] = pose.root_translation
            world_rot[i] = local
        else:
            p = joint.parent
            positions[i] = positions[p] + world_rot[p] @ joint.offset
            world_rot[i] = world_rot[p] @ local
    return positions
