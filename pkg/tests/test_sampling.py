"""Snippet start sampling over temporal segments."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synthaction.sampling import SegmentSampler, sample_segments, segment_bounds


class TestCenterMode:
    def test_thirty_frames_three_segments(self):
        sampler = SegmentSampler(num_segments=3, mode="test_center", stack_length=1)
        assert sample_segments(30, sampler) == [5, 15, 25]

    def test_single_segment_stack_five(self):
        # valid starts are 0..25; this implementation centers at 13
        sampler = SegmentSampler(num_segments=1, mode="test_center", stack_length=5)
        assert sample_segments(30, sampler) == [13]

    def test_snippets_in_bounds_near_clip_end(self):
        sampler = SegmentSampler(num_segments=3, mode="test_center", stack_length=5)
        starts = sample_segments(15, sampler)  # exactly K*L frames
        for s in starts:
            assert 0 <= s and s + 5 <= 15

    def test_too_short_clip_raises(self):
        sampler = SegmentSampler(num_segments=3, stack_length=5)
        with pytest.raises(ValueError, match="too short"):
            sample_segments(14, sampler)


class TestRandomMode:
    def test_seeded_determinism(self):
        sampler = SegmentSampler(num_segments=4, mode="train_random", stack_length=3)
        a = sample_segments(50, sampler, seed=9)
        b = sample_segments(50, sampler, seed=9)
        assert a == b

    def test_different_seeds_differ_somewhere(self):
        sampler = SegmentSampler(num_segments=4, mode="train_random", stack_length=3)
        draws = {tuple(sample_segments(50, sampler, seed=s)) for s in range(20)}
        assert len(draws) > 1

    def test_starts_respect_segment_bounds(self):
        sampler = SegmentSampler(num_segments=3, mode="train_random", stack_length=2)
        bounds = segment_bounds(31, sampler)
        for seed in range(200):
            starts = sample_segments(31, sampler, seed=seed)
            for (lo, hi), s in zip(bounds, starts):
                assert lo <= s < hi

    @settings(max_examples=300, deadline=None)
    @given(num_segments=st.integers(1, 8), stack=st.integers(1, 8),
           extra=st.integers(0, 100), seed=st.integers(0, 10_000),
           mode=st.sampled_from(["train_random", "test_center"]))
    def test_property_bounds_and_partition(self, num_segments, stack, extra, seed,
                                           mode):
        num_frames = num_segments * stack + extra
        sampler = SegmentSampler(num_segments=num_segments, mode=mode,
                                 stack_length=stack)
        bounds = segment_bounds(num_frames, sampler)
        base = num_frames // num_segments
        # ranges are nonempty, disjoint, ordered, and partition the start space
        for i, (lo, hi) in enumerate(bounds):
            assert lo == i * base
            assert lo < hi <= num_frames - stack + 1
        for (_, hi), (lo2, _) in zip(bounds, bounds[1:]):
            assert hi <= lo2
        starts = sample_segments(num_frames, sampler, seed=seed)
        assert len(starts) == num_segments
        for (lo, hi), s in zip(bounds, starts):
            assert lo <= s < hi
            assert s + stack <= num_frames


class TestSegmentBounds:
    def test_partition_covers_frames(self):
        sampler = SegmentSampler(num_segments=4, stack_length=1)
        bounds = segment_bounds(21, sampler)
        # segments tile the frame range with the remainder on the last
        assert bounds[0][0] == 0
        assert bounds == [(0, 5), (5, 10), (10, 15), (15, 21)]

    def test_validation(self):
        with pytest.raises(ValueError):
            SegmentSampler(num_segments=0)
        with pytest.raises(ValueError):
            SegmentSampler(stack_length=0)
        with pytest.raises(ValueError):
            SegmentSampler(mode="middle")
