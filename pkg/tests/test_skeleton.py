"""Forward kinematics and quaternion behavior."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synthaction.skeleton import (
    Joint,
    MotionClip,
    Pose,
    Skeleton,
    forward_kinematics,
    quat_from_axis_angle,
    quat_from_euler,
    quat_multiply,
    quat_to_matrix,
)


def chain_skeleton(offsets):
    joints = [Joint("j0", None, np.zeros(3))]
    for i, off in enumerate(offsets, start=1):
        joints.append(Joint(f"j{i}", i - 1, np.asarray(off, dtype=float)))
    return Skeleton(tuple(joints))


class TestQuaternions:
    def test_axis_angle_matches_rotation_matrix(self):
        # 90 degrees about Z maps x-hat to y-hat; computed by hand
        q = quat_from_axis_angle([0, 0, 1], np.pi / 2)
        m = quat_to_matrix(q)
        np.testing.assert_allclose(m @ [1, 0, 0], [0, 1, 0], atol=1e-12)

    def test_multiply_composes_like_matrices(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = quat_from_axis_angle(rng.normal(size=3), rng.uniform(-3, 3))
            b = quat_from_axis_angle(rng.normal(size=3), rng.uniform(-3, 3))
            lhs = quat_to_matrix(quat_multiply(a, b))
            rhs = quat_to_matrix(a) @ quat_to_matrix(b)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_euler_order_is_honored(self):
        # ZXY with only a Z angle equals the plain Z rotation
        q = quat_from_euler("ZXY", [90.0, 0.0, 0.0])
        np.testing.assert_allclose(quat_to_matrix(q) @ [1, 0, 0], [0, 1, 0],
                                   atol=1e-12)
        # order matters: XZ vs ZX on the same angles differ
        qa = quat_from_euler("XYZ", [45.0, 0.0, 90.0])
        qb = quat_from_euler("ZYX", [90.0, 0.0, 45.0])
        assert not np.allclose(quat_to_matrix(qa), quat_to_matrix(qb))


class TestSkeletonInvariants:
    def test_needs_two_joints(self):
        with pytest.raises(ValueError):
            Skeleton((Joint("only", None, np.zeros(3)),))

    def test_parent_must_precede_child(self):
        with pytest.raises(ValueError):
            Skeleton((Joint("a", None, np.zeros(3)), Joint("b", 5, np.ones(3))))

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            Skeleton((Joint("a", None, np.zeros(3)), Joint("a", 0, np.ones(3))))

    def test_pose_quaternions_must_be_unit(self):
        with pytest.raises(ValueError):
            Pose(np.zeros(3), np.array([[2.0, 0.0, 0.0, 0.0]]))


class TestForwardKinematics:
    def test_identity_pose_sums_offsets(self):
        sk = chain_skeleton([(1, 0, 0), (0, 2, 0), (0, 0, 3)])
        pos = forward_kinematics(sk, Pose.identity(4))
        np.testing.assert_allclose(pos[3], [1, 2, 3], atol=1e-12)

    def test_translation_moves_every_joint(self):
        sk = chain_skeleton([(1, 0, 0), (0, 1, 0)])
        base = forward_kinematics(sk, Pose.identity(3))
        moved = forward_kinematics(sk, Pose.identity(3, (1, 2, 3)))
        np.testing.assert_allclose(moved, base + np.array([1, 2, 3]), atol=1e-12)

    def test_root_rotation_90_about_z(self):
        # child offset (1,0,0) rotated 90 degrees about Z lands at (0,1,0)
        sk = chain_skeleton([(1, 0, 0)])
        rot = np.stack([quat_from_axis_angle([0, 0, 1], np.pi / 2),
                        np.array([1.0, 0, 0, 0])])
        pos = forward_kinematics(sk, Pose(np.zeros(3), rot))
        np.testing.assert_allclose(pos[1], [0, 1, 0], atol=1e-12)

    def test_count_mismatch_raises(self):
        sk = chain_skeleton([(1, 0, 0)])
        with pytest.raises(ValueError):
            forward_kinematics(sk, Pose.identity(5))

    def test_determinism(self):
        sk = chain_skeleton([(1, 0, 0), (0, 1, 0), (0.3, 0.2, 0.1)])
        rng = np.random.default_rng(11)
        rots = np.stack([quat_from_axis_angle(rng.normal(size=3),
                                              rng.uniform(-2, 2))
                         for _ in range(4)])
        pose = Pose(rng.normal(size=3), rots)
        a = forward_kinematics(sk, pose)
        b = forward_kinematics(sk, pose)
        assert np.array_equal(a, b)

    @settings(max_examples=60, deadline=None)
    @given(tx=st.floats(-5, 5), ty=st.floats(-5, 5), tz=st.floats(-5, 5),
           seed=st.integers(0, 1000))
    def test_translation_equivariance_property(self, tx, ty, tz, seed):
        sk = chain_skeleton([(1, 0, 0), (0, 1, 0), (0, 0, 1)])
        rng = np.random.default_rng(seed)
        rots = np.stack([quat_from_axis_angle(rng.normal(size=3) + 1e-3,
                                              rng.uniform(-3, 3))
                         for _ in range(4)])
        t = np.array([tx, ty, tz])
        base = forward_kinematics(sk, Pose(np.zeros(3), rots))
        moved = forward_kinematics(sk, Pose(t, rots))
        np.testing.assert_allclose(moved, base + t, atol=1e-9)


class TestMotionClip:
    def test_two_actor_track_required(self):
        poses = tuple(Pose.identity(2) for _ in range(5))
        with pytest.raises(ValueError):
            MotionClip("s", 30, poses, "x", actor_count=2)

    def test_track_length_mismatch(self):
        poses = tuple(Pose.identity(2) for _ in range(5))
        with pytest.raises(ValueError):
            MotionClip("s", 30, poses, "x", actor_count=2, frames_b=poses[:3])
