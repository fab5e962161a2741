"""Handcrafted per-snippet features: flow orientation histograms and
intensity histograms over a spatial grid.

Flow snippets are stacks of L consecutive flow fields; each field
contributes a per-cell histogram of B orientation bins (magnitude
weighted) plus one near-zero bin (counting pixels below the magnitude
threshold), L2-normalized per cell. Intensity features are per-cell
16-bin histograms, L1-normalized.
"""

from __future__ import annotations

import numpy as np

from .base import ParamsMixin
from .flow import FlowField


def _cell_slices(size: int, cells: int) -> list[slice]:
    edges = np.linspace(0, size, cells + 1).round().astype(int)
    return [slice(edges[i], edges[i + 1]) for i in range(cells)]


def flow_orientation_histogram(flow: FlowField, grid: int = 4,
                               orientation_bins: int = 8,
                               near_zero_threshold: float = 0.1) -> np.ndarray:
    """Per-cell orientation histogram of one flow field.

    Returns shape (grid, grid, orientation_bins + 1); the last bin counts
    near-zero pixels. Each cell vector is L2-normalized with epsilon 1e-6.
    """
    u, v = flow.u, flow.v
    h, w = u.shape
    mag = np.hypot(u, v)
    ang = np.mod(np.arctan2(v, u), 2.0 * np.pi)
    bins = np.minimum((ang / (2.0 * np.pi / orientation_bins)).astype(np.int64),
                      orientation_bins - 1)
    near = mag < near_zero_threshold
    out = np.zeros((grid, grid, orientation_bins + 1))
    row_slices = _cell_slices(h, grid)
    col_slices = _cell_slices(w, grid)
    for gy, rs in enumerate(row_slices):
        for gx, cs in enumerate(col_slices):
            cb = bins[rs, cs]
            cm = mag[rs, cs]
            cn = near[rs, cs]
            hist = np.bincount(cb[~cn].ravel(), weights=cm[~cn].ravel(),
                               minlength=orientation_bins)
            cell = np.concatenate([hist, [np.count_nonzero(cn)]])
            out[gy, gx] = cell / (np.linalg.norm(cell) + 1e-6)
    return out


def intensity_histogram(gray: np.ndarray, grid: int = 4, bins: int = 16) -> np.ndarray:
    """Per-cell intensity histogram of a grayscale frame, L1-normalized.

    Returns shape (grid, grid, bins).
    """
    gray = np.asarray(gray)
    h, w = gray.shape
    idx = np.minimum((gray.astype(np.float64) / 256.0 * bins).astype(np.int64), bins - 1)
    out = np.zeros((grid, grid, bins))
    row_slices = _cell_slices(h, grid)
    col_slices = _cell_slices(w, grid)
    for gy, rs in enumerate(row_slices):
        for gx, cs in enumerate(col_slices):
            hist = np.bincount(idx[rs, cs].ravel(), minlength=bins).astype(np.float64)
            total = hist.sum()
            out[gy, gx] = hist / total if total > 0 else hist
    return out


class FlowHistogramFeatures(ParamsMixin):
    """Transformer mapping flow-field stacks to fixed-length vectors.

    Feature length is grid^2 * (orientation_bins + 1) * stack_length.
    """

    def __init__(self, grid: int = 4, orientation_bins: int = 8,
                 near_zero_threshold: float = 0.1, stack_length: int = 5):
        self.grid = grid
        self.orientation_bins = orientation_bins
        self.near_zero_threshold = near_zero_threshold
        self.stack_length = stack_length

    @property
    def feature_length(self) -> int:
        return self.grid ** 2 * (self.orientation_bins + 1) * self.stack_length

    def fit(self, X=None, y=None):
        return self

    def transform_stack(self, stack) -> np.ndarray:
        """One snippet (iterable of stack_length FlowFields) to one vector."""
        stack = list(stack)
        if len(stack) != self.stack_length:
            raise ValueError(f"expected {self.stack_length} flow fields, got {len(stack)}")
        parts = [flow_orientation_histogram(f, self.grid, self.orientation_bins,
                                            self.near_zero_threshold).ravel()
                 for f in stack]
        return np.concatenate(parts)

    def transform(self, stacks) -> np.ndarray:
        return np.stack([self.transform_stack(s) for s in stacks])


class IntensityHistogramFeatures(ParamsMixin):
    """Transformer mapping grayscale frames to per-cell histogram vectors."""

    def __init__(self, grid: int = 4, bins: int = 16):
        self.grid = grid
        self.bins = bins

    @property
    def feature_length(self) -> int:
        return self.grid ** 2 * self.bins

    def fit(self, X=None, y=None):
        return self

    def transform_frame(self, gray) -> np.ndarray:
        return intensity_histogram(np.asarray(gray), self.grid, self.bins).ravel()

    def transform(self, frames) -> np.ndarray:
        return np.stack([self.transform_frame(f) for f in frames])
