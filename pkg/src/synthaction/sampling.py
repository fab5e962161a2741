"""Sparse snippet sampling over temporal segments."""

from __future__ import annotations

from dataclasses import dataclass

from .seeding import spawn_rng


@dataclass(frozen=True)
class SegmentSampler:
    num_segments: int = 3
    mode: str = "test_center"   # "train_random" | "test_center"
    stack_length: int = 5       # flow frames per snippet

    def __post_init__(self):
        if self.num_segments < 1:
            raise ValueError("num_segments must be at least 1")
        if self.stack_length < 1:
            raise ValueError("stack_length must be at least 1")
        if self.mode not in ("train_random", "test_center"):
            raise ValueError(f"unknown sampling mode {self.mode!r}")


def segment_bounds(num_frames: int, sampler: SegmentSampler) -> list[tuple[int, int]]:
    """Per-segment ranges [lo, hi) of valid snippet start indices.

    The video is cut into num_segments equal contiguous segments (remainder
    on the last); a snippet may run past its segment but never past the
    clip end, so each range is clipped to num_frames - stack_length + 1.
    """
    k, ell = sampler.num_segments, sampler.stack_length
    if num_frames < k * ell:
        raise ValueError(
            f"clip too short: {num_frames} frames < {k} segments x {ell} stack")
    base = num_frames // k
    last_valid = num_frames - ell + 1
    bounds = []
    for i in range(k):
        lo = i * base
        hi = num_frames if i == k - 1 else (i + 1) * base
        bounds.append((lo, min(hi, last_valid)))
    return bounds


def sample_segments(num_frames: int, sampler: SegmentSampler, seed: int = 0) -> list[int]:
    """One snippet start index per segment.

    test_center picks the middle of each segment's valid range;
    train_random draws uniformly from it, seeded.
    """
    bounds = segment_bounds(num_frames, sampler)
    if sampler.mode == "test_center":
        return [lo + (hi - lo) // 2 for lo, hi in bounds]
    rng = spawn_rng("segments", seed)
    return [int(rng.integers(lo, hi)) for lo, hi in bounds]
