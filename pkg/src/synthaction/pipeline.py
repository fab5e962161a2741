"""From dataset directory to trained multi-stream networks and evaluations.

A network is a list of stream specs: each stream has a modality (flow or
rgb), a set of source kinds whose training videos feed it, and a fusion
weight. The three network layouts:

    net1: flow(real+synthetic) w=2.0, flow(real) w=1.0,
          rgb(real) w=1.0, rgb(real+synthetic) w=0.5
    net2: flow(real) , rgb(real), flow(real+synthetic), equal weights
    net3: flow(synthetic only), single stream

Streams train on per-snippet feature vectors; videos are scored by
segmental consensus over test_center snippets and fused late.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .classifier import StreamClassifier
from .features import FlowHistogramFeatures, IntensityHistogramFeatures
from .flow import EncodedFlow, decode_flow
from .fusion import EvalResult, evaluate, fuse_scores, predict_video
from .manifest import DatasetManifest, SplitSpec, VideoRecord, read_manifest, \
    read_split, subsample_real, subsample_synthetic
from .pgm import read_pgm
from .sampling import SegmentSampler, sample_segments
from .seeding import stable_seed

NETWORK_NAMES = ("net1", "net2", "net3")


@dataclass(frozen=True)
class StreamSpec:
    name: str
    modality: str                  # "flow" | "rgb"
    sources: tuple[str, ...]       # source kinds feeding the stream
    weight: float

    def __post_init__(self):
        if self.modality not in ("flow", "rgb"):
            raise ValueError(f"unknown modality {self.modality!r}")
        object.__setattr__(self, "sources", tuple(self.sources))


def network_streams(network: str) -> list[StreamSpec]:
    both = ("real_like", "simplified")
    if network == "net1":
        return [
            StreamSpec("flow_real_synth", "flow", both, 2.0),
            StreamSpec("flow_real", "flow", ("real_like",), 1.0),
            StreamSpec("rgb_real", "rgb", ("real_like",), 1.0),
            StreamSpec("rgb_real_synth", "rgb", both, 0.5),
        ]
    if network == "net2":
        return [
            StreamSpec("flow_real", "flow", ("real_like",), 1.0),
            StreamSpec("rgb_real", "rgb", ("real_like",), 1.0),
            StreamSpec("flow_real_synth", "flow", both, 1.0),
        ]
    if network == "net3":
        return [StreamSpec("flow_synth", "flow", ("simplified",), 1.0)]
    raise ValueError(f"unknown network {network!r}; expected one of {NETWORK_NAMES}")


@dataclass
class TrainSettings:
    """SGD and model settings shared by every stream of a run.

    The dropout defaults are calibrated for desk-scale hidden layers;
    heavy temporal-stream dropout like 0.8 presumes backbone-sized layers
    (~1024 units) and stalls training at this scale, so it is left to
    config. snippet_draws > 1 re-samples the random training snippets
    several times per video, the desk-scale stand-in for fresh snippet
    draws every epoch.
    """
    batch_size: int = 128
    momentum: float = 0.9
    learning_rate: float = 0.05
    lr_decay: float = 0.1
    epochs: int = 40
    seed: int = 0
    hidden_units: int | None = 96
    flow_dropout: float = 0.3
    rgb_dropout: float = 0.3
    snippet_draws: int = 5


class Dataset:
    """Read access to a generated dataset directory."""

    def __init__(self, root):
        self.root = Path(root)
        manifest_path = self.root / "manifest.tsv"
        if not manifest_path.exists():
            raise FileNotFoundError(f"no manifest.tsv under {self.root}")
        self.manifest: DatasetManifest = read_manifest(manifest_path)
        self._records = self.manifest.by_id()

    def record(self, video_id: str) -> VideoRecord:
        return self._records[video_id]

    def split(self, split_id: int) -> SplitSpec:
        path = self.root / f"split_{split_id}.tsv"
        if not path.exists():
            raise FileNotFoundError(f"missing {path.name}; run gen first")
        return read_split(path, split_id)

    def video_dir(self, video_id: str) -> Path:
        return self.root / self._records[video_id].relative_path

    def frame(self, video_id: str, index: int) -> np.ndarray:
        return read_pgm(self.video_dir(video_id) / f"frame_{index:05d}.pgm")

    def flow_field(self, video_id: str, index: int):
        vdir = self.video_dir(video_id)
        enc = EncodedFlow(
            x_plane=read_pgm(vdir / f"flow_x_{index:05d}.pgm"),
            y_plane=read_pgm(vdir / f"flow_y_{index:05d}.pgm"),
            bound=self.manifest.flow_bound)
        return decode_flow(enc)


def _desk_flow_features() -> FlowHistogramFeatures:
    # finer grid than the 4x4 class default: at desk-scale resolutions the
    # figure spans only a couple of coarse cells
    return FlowHistogramFeatures(grid=6)


def _desk_rgb_features() -> IntensityHistogramFeatures:
    return IntensityHistogramFeatures(grid=6)


@dataclass
class FeatureExtractors:
    flow: FlowHistogramFeatures = field(default_factory=_desk_flow_features)
    rgb: IntensityHistogramFeatures = field(default_factory=_desk_rgb_features)
    sampler: SegmentSampler = field(default_factory=SegmentSampler)


def snippet_features(dataset: Dataset, video_id: str, modality: str,
                     extractors: FeatureExtractors, mode: str,
                     seed: int = 0, draws: int = 1) -> np.ndarray:
    """Per-snippet feature matrix for one video.

    Flow snippets read stack_length consecutive decoded flow fields; rgb
    snippets read the frame at the snippet start. test_center yields
    num_segments rows; train_random yields draws * num_segments rows from
    independently seeded snippet draws.
    """
    rec = dataset.record(video_id)
    sampler = replace(extractors.sampler, mode=mode)
    if mode == "test_center":
        draws = 1
    rows = []
    for draw in range(draws):
        if modality == "flow":
            num_units = rec.num_frames - 1  # flow fields between frames
            starts = sample_segments(num_units, sampler,
                                     seed=stable_seed("snip", seed, video_id, draw))
            for start in starts:
                stack = [dataset.flow_field(video_id, start + j)
                         for j in range(sampler.stack_length)]
                rows.append(extractors.flow.transform_stack(stack))
        else:
            rgb_sampler = replace(sampler, stack_length=1)
            starts = sample_segments(rec.num_frames, rgb_sampler,
                                     seed=stable_seed("snip", seed, video_id,
                                                      "rgb", draw))
            rows.extend(extractors.rgb.transform_frame(dataset.frame(video_id, s))
                        for s in starts)
    return np.stack(rows)


class FeatureBank:
    """Cache of per-video snippet features keyed by
    (video, modality, mode, seed, draws)."""

    def __init__(self, dataset: Dataset, extractors: FeatureExtractors | None = None):
        self.dataset = dataset
        self.extractors = extractors or FeatureExtractors()
        self._cache: dict[tuple, np.ndarray] = {}

    def get(self, video_id: str, modality: str, mode: str, seed: int = 0,
            draws: int = 1) -> np.ndarray:
        if mode == "test_center":
            seed, draws = 0, 1
        key = (video_id, modality, mode, seed, draws)
        if key not in self._cache:
            self._cache[key] = snippet_features(
                self.dataset, video_id, modality, self.extractors, mode, seed,
                draws)
        return self._cache[key]


@dataclass
class TrainedNetwork:
    network: str
    streams: list[tuple[StreamSpec, StreamClassifier]]
    classes: tuple[str, ...]

    @property
    def fusion_weights(self) -> np.ndarray:
        return np.array([spec.weight for spec, _ in self.streams])


def select_training_ids(dataset: Dataset, split: SplitSpec, keep_fraction: float,
                        synthetic_count: int | None, seed: int) -> SplitSpec:
    """Apply the real-video reduction and the synthetic per-class cap."""
    out = subsample_real(split, dataset.manifest, keep_fraction, seed=seed)
    out = subsample_synthetic(out, dataset.manifest, synthetic_count, seed=seed)
    return out


def train_streams(dataset: Dataset, stream_data: list[tuple[StreamSpec, list[str]]],
                  settings: TrainSettings, split_id: int, network: str,
                  bank: FeatureBank | None = None) -> TrainedNetwork:
    """Train explicit (stream spec, training video ids) pairs."""
    bank = bank or FeatureBank(dataset)
    by_id = dataset.manifest.by_id()
    num_classes = len(dataset.manifest.classes)
    streams = []
    for spec, vids in stream_data:
        vids = sorted(vids)
        if not vids:
            raise ValueError(f"stream {spec.name!r} has no training videos")
        X_rows, y_rows = [], []
        for vid in vids:
            feats = bank.get(vid, spec.modality, "train_random", settings.seed,
                             draws=settings.snippet_draws)
            X_rows.append(feats)
            y_rows.extend([by_id[vid].class_index] * feats.shape[0])
        X = np.concatenate(X_rows)
        y = np.asarray(y_rows, dtype=np.int64)
        dropout = settings.flow_dropout if spec.modality == "flow" \
            else settings.rgb_dropout
        clf = StreamClassifier(
            num_classes=num_classes,
            hidden_units=settings.hidden_units,
            dropout=dropout,
            learning_rate=settings.learning_rate,
            lr_decay=settings.lr_decay,
            batch_size=settings.batch_size,
            momentum=settings.momentum,
            epochs=settings.epochs,
            seed=stable_seed("train", settings.seed, split_id, network, spec.name),
        )
        clf.fit(X, y)
        streams.append((spec, clf))
    return TrainedNetwork(network=network, streams=streams,
                          classes=dataset.manifest.classes)


def train_network(dataset: Dataset, split: SplitSpec, network: str,
                  settings: TrainSettings, bank: FeatureBank | None = None,
                  keep_fraction: float = 1.0,
                  synthetic_count: int | None = None) -> TrainedNetwork:
    """Train every stream of a network layout on the split's train videos."""
    effective = select_training_ids(dataset, split, keep_fraction,
                                    synthetic_count, settings.seed)
    by_id = dataset.manifest.by_id()
    stream_data = []
    for spec in network_streams(network):
        vids = [v for v in effective.train_ids if by_id[v].source_kind in spec.sources]
        stream_data.append((spec, vids))
    return train_streams(dataset, stream_data, settings, split.split_id,
                         network, bank)


def evaluate_network(trained: TrainedNetwork, dataset: Dataset, split: SplitSpec,
                     bank: FeatureBank | None = None) -> tuple[EvalResult, dict]:
    """Fused evaluation on the split's real_like test videos.

    Also returns per-stream EvalResults keyed by stream name.
    """
    bank = bank or FeatureBank(dataset)
    by_id = dataset.manifest.by_id()
    test_ids = sorted(v for v in split.test_ids
                      if by_id[v].source_kind == "real_like")
    if not test_ids:
        raise ValueError("split has no real_like test videos")
    num_classes = len(dataset.manifest.classes)
    y_true, y_fused = [], []
    per_stream_preds: dict[str, list[int]] = {s.name: [] for s, _ in trained.streams}
    weights = trained.fusion_weights
    for vid in test_ids:
        scores = []
        for spec, clf in trained.streams:
            feats = bank.get(vid, spec.modality, "test_center")
            video_scores = predict_video(clf, feats)
            scores.append(video_scores)
            per_stream_preds[spec.name].append(int(np.argmax(video_scores)))
        _, pred = fuse_scores(scores, weights)
        y_true.append(by_id[vid].class_index)
        y_fused.append(pred)
    fused_result = evaluate(y_true, y_fused, num_classes)
    stream_results = {
        name: evaluate(y_true, preds, num_classes)
        for name, preds in per_stream_preds.items()
    }
    return fused_result, stream_results
