"""Dense optical flow by coarse-to-fine Horn-Schunck, plus 8-bit encoding.

The solver builds intensity pyramids, warps the second frame by the current
estimate at each level, and relaxes the classic fixed-point update (data
term plus alpha^2-weighted smoothness) with Jacobi sweeps. Derivatives are
central differences; boundaries are handled reflectively. Two practical
stabilizers ride along:

- a median filter on the flow before each warp step (and once at the end),
  which stops warping runaway where correspondence breaks down, e.g. at
  frame borders;
- a zero-damping term, gated by local gradient energy, that pins the flow
  to zero wherever the images carry no gradient information at all (blank
  regions), where the plain update would otherwise fill in whatever the
  foreground is doing. The gate closes exponentially with the squared
  spatial gradient, so textured pixels are never biased. Set zero_damping
  to 0 to recover the textbook update.

Images are processed as float64 on the 0..255 intensity scale. All solver
steps operate on arrays of shape (..., H, W), so a whole clip's frame
pairs run through one vectorized solve (estimate_flow_sequence) with
results bit-identical to pair-at-a-time calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_same_shape

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# neighbor-average kernel of the Horn-Schunck relaxation
_AVG_KERNEL = np.array([[1 / 12, 1 / 6, 1 / 12],
                        [1 / 6, 0.0, 1 / 6],
                        [1 / 12, 1 / 6, 1 / 12]])

_DAMPING_GATE_TAU = 2.0   # squared-gradient scale closing the zero-damping gate
_MEDIAN_PRE_RADIUS = 1    # flow cleanup before every warp step
_MEDIAN_FINAL_RADIUS = 2  # outlier sweep on the returned field


@dataclass(frozen=True)
class FlowParams:
    smoothness_alpha: float = 15.0
    iterations_per_level: int = 100
    pyramid_levels: int = 4
    pyramid_scale: float = 0.5
    warp_steps_per_level: int = 3
    zero_damping: float = 2.5

    def __post_init__(self):
        if self.smoothness_alpha <= 0:
            raise ValueError("smoothness_alpha must be positive")
        if self.iterations_per_level < 1:
            raise ValueError("iterations_per_level must be at least 1")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be at least 1")
        if not (0.0 < self.pyramid_scale < 1.0):
            raise ValueError("pyramid_scale must lie in (0, 1)")
        if self.warp_steps_per_level < 1:
            raise ValueError("warp_steps_per_level must be at least 1")
        if self.zero_damping < 0:
            raise ValueError("zero_damping must be non-negative")


@dataclass(frozen=True)
class FlowField:
    u: np.ndarray  # horizontal displacement, pixels/frame
    v: np.ndarray  # vertical displacement, pixels/frame

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if u.ndim != 2 or u.shape != v.shape:
            raise ValueError("u and v must be 2-d arrays of equal shape")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("flow components must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def height(self) -> int:
        return self.u.shape[0]

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)


def to_gray(frame) -> np.ndarray:
    """Frame (uint8 array, Frame object, or float array) to float64 grayscale."""
    pixels = getattr(frame, "pixels", frame)
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 3:
        r, g, b = LUMA_WEIGHTS
        arr = r * arr[..., 0] + g * arr[..., 1] + b * arr[..., 2]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d or 3-d image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return arr


# -- array helpers (all accept (..., H, W) stacks) ---------------------------


def _reflect_pad(img: np.ndarray, r: int = 1) -> np.ndarray:
    pad = [(0, 0)] * (img.ndim - 2) + [(r, r), (r, r)]
    return np.pad(img, pad, mode="symmetric")


def _convolve3(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """3x3 correlation with reflective boundaries, via shifted slices."""
    p = _reflect_pad(img, 1)
    h, w = img.shape[-2:]
    out = np.zeros_like(img)
    for dy in range(3):
        for dx in range(3):
            k = kernel[dy, dx]
            if k != 0.0:
                out += k * p[..., dy:dy + h, dx:dx + w]
    return out


def _central_diff_x(img: np.ndarray) -> np.ndarray:
    p = _reflect_pad(img, 1)
    h, w = img.shape[-2:]
    return 0.5 * (p[..., 1:1 + h, 2:2 + w] - p[..., 1:1 + h, 0:w])


def _central_diff_y(img: np.ndarray) -> np.ndarray:
    p = _reflect_pad(img, 1)
    h, w = img.shape[-2:]
    return 0.5 * (p[..., 2:2 + h, 1:1 + w] - p[..., 0:h, 1:1 + w])


def _reflect_coords(c: np.ndarray, n: int) -> np.ndarray:
    """Fold float coordinates into [0, n-1] by symmetric reflection."""
    if n == 1:
        return np.zeros_like(c)
    period = 2.0 * (n - 1)
    c = np.mod(c, period)
    return np.where(c > n - 1, period - c, c)


def _cubic_weights(t: np.ndarray) -> tuple[np.ndarray, ...]:
    """Catmull-Rom weights for taps at offsets -1, 0, 1, 2."""
    t2 = t * t
    t3 = t2 * t
    return (-0.5 * t3 + t2 - 0.5 * t,
            1.5 * t3 - 2.5 * t2 + 1.0,
            -1.5 * t3 + 2.0 * t2 + 0.5 * t,
            0.5 * t3 - 0.5 * t2)


def _warp_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bicubic sample of (B?, H, W) stacks at per-item float coordinates.

    Cubic interpolation keeps warp-induced resampling error an order of
    magnitude below bilinear, so successive warp steps refine instead of
    chasing interpolation noise. Exact at integer coordinates. Out-of-range
    coordinates fold back by symmetric reflection; edge taps clamp.
    """
    h, w = img.shape[-2:]
    xs = _reflect_coords(xs, w)
    ys = _reflect_coords(ys, h)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.clip(x0, 0, max(w - 2, 0))
    y0 = np.clip(y0, 0, max(h - 2, 0))
    fx = xs - x0
    fy = ys - y0
    wx = _cubic_weights(fx)
    wy = _cubic_weights(fy)
    xt = [np.clip(x0 + o, 0, w - 1) for o in (-1, 0, 1, 2)]
    yt = [np.clip(y0 + o, 0, h - 1) for o in (-1, 0, 1, 2)]
    batch = None if img.ndim == 2 else np.arange(img.shape[0])[:, None, None]
    total = None
    for j in range(4):
        row = None
        for i in range(4):
            tap = img[yt[j], xt[i]] if batch is None else img[batch, yt[j], xt[i]]
            term = wx[i] * tap
            row = term if row is None else row + term
        term = wy[j] * row
        total = term if total is None else total + term
    return total


def _resize_bilinear(img: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Resize the trailing two axes; identical grid for every batch item."""
    h, w = img.shape[-2:]
    ys = _reflect_coords((np.arange(new_h) + 0.5) * (h / new_h) - 0.5, h)
    xs = _reflect_coords((np.arange(new_w) + 0.5) * (w / new_w) - 0.5, w)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, max(h - 2, 0))
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    rows0 = img[..., y0, :]
    rows1 = img[..., y1, :]
    fy_col = fy[:, None]
    def cols(rows):
        return rows[..., x0] * (1 - fx) + rows[..., x1] * fx
    return cols(rows0) * (1 - fy_col) + cols(rows1) * fy_col


def _downsample(img: np.ndarray, scale: float) -> np.ndarray:
    kernel = np.outer([1, 4, 6, 4, 1], [1, 4, 6, 4, 1]) / 256.0
    p = _reflect_pad(img, 2)
    h, w = img.shape[-2:]
    smooth = np.zeros_like(img)
    for dy in range(5):
        for dx in range(5):
            smooth += kernel[dy, dx] * p[..., dy:dy + h, dx:dx + w]
    new_h = max(2, int(round(h * scale)))
    new_w = max(2, int(round(w * scale)))
    return _resize_bilinear(smooth, new_h, new_w)


def _median_filter(x: np.ndarray, radius: int) -> np.ndarray:
    p = _reflect_pad(x, radius)
    h, w = x.shape[-2:]
    size = 2 * radius + 1
    stack = [p[..., dy:dy + h, dx:dx + w] for dy in range(size) for dx in range(size)]
    return np.median(np.stack(stack), axis=0)


def _build_pyramid(img: np.ndarray, params: FlowParams) -> list[np.ndarray]:
    levels = [img]
    for _ in range(params.pyramid_levels - 1):
        nxt = _downsample(levels[-1], params.pyramid_scale)
        if min(nxt.shape[-2:]) < 8:
            break
        levels.append(nxt)
    return levels  # levels[0] is finest


def _hs_relax(i1: np.ndarray, i2w: np.ndarray, u: np.ndarray, v: np.ndarray,
              u0: np.ndarray, v0: np.ndarray, params: FlowParams,
              energy_log: list | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Jacobi sweeps of the fixed-point update for the warped pair.

    When energy_log is given, the quadratic objective this relaxation
    solves (data residual frozen at base flow u0, v0, plus the
    kernel-weighted pairwise smoothness and the damping term) is recorded
    before and after the sweeps. The sweeps converge to the unique
    minimizer of that convex objective, so once converged the closing
    value cannot exceed the opening one.
    """
    ix = 0.5 * (_central_diff_x(i1) + _central_diff_x(i2w))
    iy = 0.5 * (_central_diff_y(i1) + _central_diff_y(i2w))
    it = i2w - i1
    alpha2 = params.smoothness_alpha ** 2
    grad2 = ix * ix + iy * iy
    eps2 = params.zero_damping ** 2 * np.exp(-grad2 / _DAMPING_GATE_TAU)
    a = alpha2 + eps2
    t0 = it - ix * u0 - iy * v0
    denom = a + grad2
    at0_denom = a * t0 / denom
    alpha2_denom = alpha2 / denom

    def linearized_energy(uu, vv):
        resid = ix * uu + iy * vv + t0
        # pairwise smoothness via the identity sum_ij a_ij (x_i - x_j)^2 / 2
        # = sum_i x_i^2 - sum_i x_i * avg(x)_i for the unit-sum kernel
        smooth = (np.sum(uu * uu) - np.sum(uu * _convolve3(uu, _AVG_KERNEL))
                  + np.sum(vv * vv) - np.sum(vv * _convolve3(vv, _AVG_KERNEL)))
        damp = np.sum(eps2 * (uu * uu + vv * vv))
        return float(np.sum(resid * resid) + alpha2 * smooth + damp)

    before = linearized_energy(u, v) if energy_log is not None else None
    for _ in range(params.iterations_per_level):
        u_avg = _convolve3(u, _AVG_KERNEL)
        v_avg = _convolve3(v, _AVG_KERNEL)
        r = alpha2_denom * (ix * u_avg + iy * v_avg) + at0_denom
        u = (alpha2 * u_avg - ix * r) / a
        v = (alpha2 * v_avg - iy * r) / a
    if energy_log is not None:
        energy_log.append((before, linearized_energy(u, v)))
    return u, v


@dataclass(frozen=True)
class WarpEnergyTrace:
    """Energies recorded at one finest-level warp step.

    linearized_before/after bracket the relaxation under the warp step's
    own fixed linearization (the solver's actual objective); the
    relaxation must never increase it. zero_base is flow_energy against
    the original unwarped pair, reported for reference: re-linearization
    legitimately moves the solution off the stale zero-base surface, so
    that sequence is not required to be monotone across warp steps.
    """
    zero_base: float
    linearized_before: float
    linearized_after: float


def _estimate_batch(a: np.ndarray, b: np.ndarray, params: FlowParams,
                    trace: list | None = None,
                    trace_frames: tuple[np.ndarray, np.ndarray] | None = None
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Coarse-to-fine solve for stacks shaped (..., H, W)."""
    pyr_a = _build_pyramid(a, params)
    pyr_b = _build_pyramid(b, params)
    u = np.zeros_like(pyr_a[-1])
    v = np.zeros_like(pyr_a[-1])
    for level in range(len(pyr_a) - 1, -1, -1):
        a_lvl, b_lvl = pyr_a[level], pyr_b[level]
        h, w = a_lvl.shape[-2:]
        if u.shape[-2:] != (h, w):
            u = _resize_bilinear(u, h, w) * (w / u.shape[-1])
            v = _resize_bilinear(v, h, w) * (h / v.shape[-2])
        xg, yg = np.meshgrid(np.arange(w, dtype=np.float64),
                             np.arange(h, dtype=np.float64))
        for _ in range(params.warp_steps_per_level):
            u = _median_filter(u, _MEDIAN_PRE_RADIUS)
            v = _median_filter(v, _MEDIAN_PRE_RADIUS)
            b_warp = _warp_sample(b_lvl, xg + u, yg + v)
            energy_log = [] if (level == 0 and trace is not None) else None
            u, v = _hs_relax(a_lvl, b_warp, u, v, u.copy(), v.copy(), params,
                             energy_log=energy_log)
            if energy_log is not None:
                ta, tb = trace_frames
                before, after = energy_log[0]
                trace.append(WarpEnergyTrace(
                    zero_base=flow_energy(FlowField(u, v), ta, tb, params),
                    linearized_before=before, linearized_after=after))
    u = _median_filter(u, _MEDIAN_FINAL_RADIUS)
    v = _median_filter(v, _MEDIAN_FINAL_RADIUS)
    return u, v


def estimate_flow(frame_a, frame_b, params: FlowParams = FlowParams()) -> FlowField:
    """Dense flow from frame_a to frame_b (single-channel inputs).

    Raises on size mismatch or non-finite pixels.
    """
    a = to_gray(frame_a)
    b = to_gray(frame_b)
    check_same_shape(a, b, "frame_a", "frame_b")
    u, v = _estimate_batch(a, b, params)
    return FlowField(u, v)


def estimate_flow_sequence(frames, params: FlowParams = FlowParams()
                           ) -> list[FlowField]:
    """Flow for every consecutive pair of a frame sequence, solved in one
    vectorized batch; results equal pairwise estimate_flow calls."""
    grays = [to_gray(f) for f in frames]
    if len(grays) < 2:
        raise ValueError("need at least 2 frames")
    for g in grays[1:]:
        check_same_shape(grays[0], g, "frames[0]", "later frame")
    a = np.stack(grays[:-1])
    b = np.stack(grays[1:])
    u, v = _estimate_batch(a, b, params)
    return [FlowField(u[i], v[i]) for i in range(u.shape[0])]


def estimate_flow_with_energy_trace(frame_a, frame_b,
                                    params: FlowParams = FlowParams()
                                    ) -> tuple[FlowField, list[WarpEnergyTrace]]:
    """Like estimate_flow, also returning one WarpEnergyTrace per
    finest-level warp step."""
    a = to_gray(frame_a)
    b = to_gray(frame_b)
    check_same_shape(a, b, "frame_a", "frame_b")
    trace: list[WarpEnergyTrace] = []
    u, v = _estimate_batch(a, b, params, trace=trace, trace_frames=(a, b))
    return FlowField(u, v), trace


def flow_energy(flow: FlowField, frame_a, frame_b,
                params: FlowParams = FlowParams()) -> float:
    """Linearized objective: sum of squared brightness-constancy residuals
    plus alpha^2 times the sum of squared flow gradients.

    Spatial derivatives of both images and of the flow are central
    differences with reflective boundaries; the temporal derivative is the
    plain frame difference.
    """
    a = to_gray(frame_a)
    b = to_gray(frame_b)
    check_same_shape(a, b, "frame_a", "frame_b")
    if flow.u.shape != a.shape:
        raise ValueError(f"flow shape {flow.u.shape} != frame shape {a.shape}")
    ix = 0.5 * (_central_diff_x(a) + _central_diff_x(b))
    iy = 0.5 * (_central_diff_y(a) + _central_diff_y(b))
    it = b - a
    residual = ix * flow.u + iy * flow.v + it
    data = float(np.sum(residual * residual))
    smooth = float(np.sum(_central_diff_x(flow.u) ** 2)
                   + np.sum(_central_diff_y(flow.u) ** 2)
                   + np.sum(_central_diff_x(flow.v) ** 2)
                   + np.sum(_central_diff_y(flow.v) ** 2))
    return data + params.smoothness_alpha ** 2 * smooth


DEFAULT_FLOW_BOUND = 20.0


@dataclass(frozen=True)
class EncodedFlow:
    """Flow quantized to two 8-bit planes; zero flow encodes to byte 128."""
    x_plane: np.ndarray
    y_plane: np.ndarray
    bound: float = DEFAULT_FLOW_BOUND

    def __post_init__(self):
        x = np.asarray(self.x_plane)
        y = np.asarray(self.y_plane)
        if x.dtype != np.uint8 or y.dtype != np.uint8 or x.shape != y.shape:
            raise ValueError("encoded planes must be uint8 arrays of equal shape")
        if self.bound <= 0:
            raise ValueError("bound must be positive")
        object.__setattr__(self, "x_plane", x)
        object.__setattr__(self, "y_plane", y)


def _encode_plane(values: np.ndarray, bound: float) -> np.ndarray:
    clipped = np.clip(values, -bound, bound)
    scaled = (clipped + bound) * (255.0 / (2.0 * bound))
    # round half away from zero; arguments are non-negative here
    return np.floor(scaled + 0.5).astype(np.uint8)


def encode_flow(flow: FlowField, bound: float = DEFAULT_FLOW_BOUND) -> EncodedFlow:
    if bound <= 0:
        raise ValueError("bound must be positive")
    return EncodedFlow(_encode_plane(flow.u, bound), _encode_plane(flow.v, bound), bound)


def decode_flow(enc: EncodedFlow) -> FlowField:
    scale = 2.0 * enc.bound / 255.0
    u = enc.x_plane.astype(np.float64) * scale - enc.bound
    v = enc.y_plane.astype(np.float64) * scale - enc.bound
    return FlowField(u, v)


def foreground_epe(flow_a: FlowField, flow_b: FlowField, mask: np.ndarray) -> float:
    """Mean endpoint difference between two fields over mask pixels."""
    mask = np.asarray(mask, dtype=bool)
    check_same_shape(flow_a.u, flow_b.u, "flow_a", "flow_b")
    check_same_shape(flow_a.u, mask, "flow", "mask")
    if not mask.any():
        raise ValueError("mask selects no pixels")
    du = flow_a.u[mask] - flow_b.u[mask]
    dv = flow_a.v[mask] - flow_b.v[mask]
    return float(np.mean(np.hypot(du, dv)))


def mean_magnitude(flow: FlowField, mask: np.ndarray | None = None) -> float:
    """Mean flow magnitude, optionally restricted to mask pixels."""
    mag = flow.magnitude()
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        check_same_shape(flow.u, mask, "flow", "mask")
        if not mask.any():
            raise ValueError("mask selects no pixels")
        mag = mag[mask]
    return float(np.mean(mag))
