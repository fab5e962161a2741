"""Optical flow: shift oracles, energy against brute force, encoding."""

import numpy as np
import pytest

from synthaction.flow import (
    EncodedFlow,
    FlowField,
    FlowParams,
    decode_flow,
    encode_flow,
    estimate_flow,
    estimate_flow_sequence,
    estimate_flow_with_energy_trace,
    flow_energy,
    foreground_epe,
    mean_magnitude,
    to_gray,
)
from synthaction.render import procedural_texture

FAST = FlowParams(iterations_per_level=40, pyramid_levels=3, warp_steps_per_level=2)


def texture(seed, size=64):
    return procedural_texture(seed, (size, size)).pixels.astype(np.float64)


def brute_force_energy(u, v, a, b, alpha):
    """Independent double-loop evaluation of the linearized objective.

    Central differences with edge clamping (identical to symmetric
    reflection at a 1-pixel pad).
    """
    h, w = a.shape

    def dx(img, y, x):
        return 0.5 * (img[y, min(x + 1, w - 1)] - img[y, max(x - 1, 0)])

    def dy(img, y, x):
        return 0.5 * (img[min(y + 1, h - 1), x] - img[max(y - 1, 0), x])

    total = 0.0
    for y in range(h):
        for x in range(w):
            ix = 0.5 * (dx(a, y, x) + dx(b, y, x))
            iy = 0.5 * (dy(a, y, x) + dy(b, y, x))
            it = b[y, x] - a[y, x]
            total += (ix * u[y, x] + iy * v[y, x] + it) ** 2
            total += alpha ** 2 * (dx(u, y, x) ** 2 + dy(u, y, x) ** 2
                                   + dx(v, y, x) ** 2 + dy(v, y, x) ** 2)
    return total


class TestZeroMotion:
    def test_identical_frames_give_zero_flow(self):
        a = texture(1)
        flow = estimate_flow(a, a)
        assert np.abs(flow.u).max() < 1e-3
        assert np.abs(flow.v).max() < 1e-3

    def test_size_mismatch_raises(self):
        with pytest.raises(ValueError):
            estimate_flow(texture(1, 32), texture(1, 16))

    def test_nonfinite_input_raises(self):
        a = texture(1, 16)
        b = a.copy()
        b[3, 3] = np.nan
        with pytest.raises(ValueError):
            estimate_flow(a, b)


class TestShiftOracle:
    @pytest.mark.parametrize("shift", [(1, 0), (2, 0), (3, 0), (0, 1), (0, 2),
                                       (0, 3), (1, 1)])
    def test_circular_shift_recovered(self, shift):
        a = texture(3, 128)
        b = np.roll(a, (shift[1], shift[0]), axis=(0, 1))
        flow = estimate_flow(a, b)
        interior = (slice(4, -4), slice(4, -4))
        epe = np.mean(np.hypot(flow.u[interior] - shift[0],
                               flow.v[interior] - shift[1]))
        assert epe < 0.25, f"shift {shift}: EPE {epe:.4f}"

    def test_batch_equals_pairwise(self):
        frames = [texture(i, 48) for i in range(4)]
        batch = estimate_flow_sequence(frames, FAST)
        for i in range(3):
            single = estimate_flow(frames[i], frames[i + 1], FAST)
            assert np.array_equal(single.u, batch[i].u)
            assert np.array_equal(single.v, batch[i].v)


class TestEnergy:
    def test_zero_flow_identical_frames_zero_energy(self):
        a = texture(2, 16)
        zero = FlowField(np.zeros((16, 16)), np.zeros((16, 16)))
        assert flow_energy(zero, a, a) == 0.0

    def test_constant_flow_has_zero_smoothness(self):
        a = texture(2, 16)
        const = FlowField(np.full((16, 16), 1.3), np.full((16, 16), -0.4))
        alpha_small = FlowParams(smoothness_alpha=1e-6)
        alpha_big = FlowParams(smoothness_alpha=1e6)
        # smoothness contributes nothing, so alpha cannot matter
        e_small = flow_energy(const, a, a, alpha_small)
        e_big = flow_energy(const, a, a, alpha_big)
        np.testing.assert_allclose(e_small, e_big, rtol=1e-9)

    def test_matches_brute_force_on_16x16(self):
        rng = np.random.default_rng(7)
        a = texture(5, 16)
        b = texture(6, 16)
        u = rng.uniform(-1, 1, size=(16, 16))
        v = rng.uniform(-1, 1, size=(16, 16))
        params = FlowParams(smoothness_alpha=15.0)
        got = flow_energy(FlowField(u, v), a, b, params)
        want = brute_force_energy(u, v, a, b, alpha=15.0)
        assert abs(got - want) <= 1e-6 * abs(want)

    def test_relaxation_never_increases_its_linearized_energy(self):
        """At every finest-level warp step the Horn-Schunck sweeps must not
        increase the energy of that step's own (fixed) linearization."""
        for damping, tex_seed, shift in [(0.0, 4, (0, 1)), (0.0, 9, (1, 0)),
                                         (2.5, 4, (1, 1)), (2.5, 3, (2, 0))]:
            a = texture(tex_seed, 64)
            b = np.roll(a, (shift[1], shift[0]), axis=(0, 1))
            params = FlowParams(zero_damping=damping)
            _, trace = estimate_flow_with_energy_trace(a, b, params)
            assert len(trace) == params.warp_steps_per_level
            for step in trace:
                assert step.linearized_after <= step.linearized_before * (1 + 1e-12)

    def test_first_warp_step_beats_zero_flow(self):
        """Single-level solve: the energy after the first warp step must
        undercut the zero flow field it started from."""
        a = texture(4, 64)
        b = np.roll(a, (0, 1), axis=(0, 1))
        params = FlowParams(pyramid_levels=1, zero_damping=0.0)
        zero = FlowField(np.zeros_like(a), np.zeros_like(a))
        start = flow_energy(zero, a, b, params)
        _, trace = estimate_flow_with_energy_trace(a, b, params)
        assert trace[0].zero_base < start


class TestEncoding:
    def test_zero_flow_encodes_to_128(self):
        flow = FlowField(np.zeros((4, 4)), np.zeros((4, 4)))
        enc = encode_flow(flow, bound=20.0)
        assert np.all(enc.x_plane == 128)
        assert np.all(enc.y_plane == 128)

    def test_endpoints(self):
        flow = FlowField(np.full((2, 2), 20.0), np.full((2, 2), -20.0))
        enc = encode_flow(flow, bound=20.0)
        assert np.all(enc.x_plane == 255)
        assert np.all(enc.y_plane == 0)

    def test_out_of_range_clamps(self):
        flow = FlowField(np.full((2, 2), 99.0), np.full((2, 2), -99.0))
        enc = encode_flow(flow, bound=20.0)
        assert np.all(enc.x_plane == 255)
        assert np.all(enc.y_plane == 0)

    def test_round_trip_error_within_quantization(self):
        rng = np.random.default_rng(11)
        values = rng.uniform(-20, 20, size=(1000,))
        flow = FlowField(values.reshape(25, 40), values.reshape(25, 40)[::-1])
        enc = encode_flow(flow, bound=20.0)
        dec = decode_flow(enc)
        bound_err = 20.0 / 255 + 1e-9
        assert np.max(np.abs(dec.u - flow.u)) <= bound_err
        assert np.max(np.abs(dec.v - flow.v)) <= bound_err

    def test_half_away_from_zero_rounding(self):
        # encoding formula: byte = floor((clamp + bound) * 255 / (2*bound) + 0.5)
        bound = 20.0
        value = (128.5 * 2 * bound / 255) - bound  # exactly halfway to 129
        flow = FlowField(np.full((1, 1), value), np.zeros((1, 1)))
        enc = encode_flow(flow, bound)
        assert enc.x_plane[0, 0] == 129

    def test_requires_positive_bound(self):
        flow = FlowField(np.zeros((2, 2)), np.zeros((2, 2)))
        with pytest.raises(ValueError):
            encode_flow(flow, bound=0.0)


class TestForegroundEpe:
    def test_identical_fields_give_zero(self):
        f = FlowField(np.ones((8, 8)), np.zeros((8, 8)))
        mask = np.zeros((8, 8), dtype=bool)
        mask[2:5, 2:5] = True
        assert foreground_epe(f, f, mask) == 0.0

    def test_constant_offset_gives_offset_norm(self):
        a = FlowField(np.ones((8, 8)), np.zeros((8, 8)))
        b = FlowField(np.zeros((8, 8)), np.zeros((8, 8)))
        mask = np.zeros((8, 8), dtype=bool)
        mask[1:3, 1:6] = True
        assert foreground_epe(a, b, mask) == pytest.approx(1.0)

    def test_matches_brute_force_mean(self):
        rng = np.random.default_rng(2)
        a = FlowField(rng.normal(size=(8, 8)), rng.normal(size=(8, 8)))
        b = FlowField(rng.normal(size=(8, 8)), rng.normal(size=(8, 8)))
        mask = rng.random((8, 8)) < 0.2
        if not mask.any():
            mask[0, 0] = True
        total, count = 0.0, 0
        for y in range(8):
            for x in range(8):
                if mask[y, x]:
                    du = a.u[y, x] - b.u[y, x]
                    dv = a.v[y, x] - b.v[y, x]
                    total += np.sqrt(du * du + dv * dv)
                    count += 1
        assert foreground_epe(a, b, mask) == pytest.approx(total / count)

    def test_empty_mask_raises(self):
        f = FlowField(np.zeros((4, 4)), np.zeros((4, 4)))
        with pytest.raises(ValueError):
            foreground_epe(f, f, np.zeros((4, 4), dtype=bool))

    def test_mean_magnitude(self):
        f = FlowField(np.full((4, 4), 3.0), np.full((4, 4), 4.0))
        assert mean_magnitude(f) == pytest.approx(5.0)


class TestToGray:
    def test_luma_weights(self):
        rgb = np.zeros((1, 1, 3))
        rgb[0, 0] = (100, 200, 50)
        expected = 0.299 * 100 + 0.587 * 200 + 0.114 * 50
        assert to_gray(rgb)[0, 0] == pytest.approx(expected)
