"""Dataset manifest, train/test splits, and stratified subsampling.

On disk a dataset is a directory tree of PGM files plus a tab-separated
manifest and three split files:

    <out>/<class>/<video_id>/frame_%05d.pgm
    <out>/<class>/<video_id>/flow_x_%05d.pgm, flow_y_%05d.pgm
    <out>/manifest.tsv
    <out>/split_{1,2,3}.tsv

manifest.tsv starts with a header line naming the eight record columns;
lines starting with '#' carry dataset-level metadata. All text is UTF-8
with LF line endings.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .seeding import spawn_rng, stable_seed

SOURCE_KINDS = ("real_like", "simplified")
MANIFEST_NAME = "manifest.tsv"
_COLUMNS = ("video_id", "class_name", "class_index", "source_kind",
            "num_frames", "fps", "seed", "relative_path")


class ManifestError(ValueError):
    """Malformed manifest or split file."""


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    class_name: str
    class_index: int
    source_kind: str
    num_frames: int
    fps: int
    seed: int
    relative_path: str

    def __post_init__(self):
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"source_kind must be one of {SOURCE_KINDS}")
        if self.num_frames < 2:
            raise ValueError("a video needs at least 2 frames")


@dataclass(frozen=True)
class DatasetManifest:
    classes: tuple[str, ...]
    records: tuple[VideoRecord, ...]
    flow_bound: float = 20.0
    generator_version: str = "1"
    global_seed: int = 0

    def __post_init__(self):
        classes = tuple(self.classes)
        records = tuple(self.records)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "records", records)
        seen = set()
        for r in records:
            if r.video_id in seen:
                raise ManifestError(f"duplicate video_id {r.video_id!r}")
            seen.add(r.video_id)
            if not (0 <= r.class_index < len(classes)) or \
                    classes[r.class_index] != r.class_name:
                raise ManifestError(
                    f"record {r.video_id!r}: class_index inconsistent with class list")

    def by_id(self) -> dict[str, VideoRecord]:
        return {r.video_id: r for r in self.records}

    def class_records(self, class_name: str) -> list[VideoRecord]:
        return [r for r in self.records if r.class_name == class_name]


def write_manifest(path, manifest: DatasetManifest) -> None:
    lines = ["\t".join(_COLUMNS)]
    lines.append("#classes\t" + ",".join(manifest.classes))
    lines.append(f"#flow_bound\t{manifest.flow_bound!r}")
    lines.append(f"#generator_version\t{manifest.generator_version}")
    lines.append(f"#global_seed\t{manifest.global_seed}")
    for r in manifest.records:
        lines.append("\t".join((r.video_id, r.class_name, str(r.class_index),
                                r.source_kind, str(r.num_frames), str(r.fps),
                                str(r.seed), r.relative_path)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_manifest(path) -> DatasetManifest:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].split("\t") != list(_COLUMNS):
        raise ManifestError(f"{path}: missing or wrong header line")
    meta: dict[str, str] = {}
    records: list[VideoRecord] = []
    classes: tuple[str, ...] = ()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("\t")
            meta[key] = value
            continue
        parts = line.split("\t")
        if len(parts) != len(_COLUMNS):
            raise ManifestError(f"{path}:{lineno}: expected {len(_COLUMNS)} fields, "
                                f"got {len(parts)}")
        try:
            records.append(VideoRecord(
                video_id=parts[0], class_name=parts[1], class_index=int(parts[2]),
                source_kind=parts[3], num_frames=int(parts[4]), fps=int(parts[5]),
                seed=int(parts[6]), relative_path=parts[7]))
        except ValueError as exc:
            raise ManifestError(f"{path}:{lineno}: {exc}") from None
    if "classes" in meta:
        classes = tuple(meta["classes"].split(","))
    else:
        by_index: dict[int, str] = {r.class_index: r.class_name for r in records}
        classes = tuple(by_index[i] for i in sorted(by_index))
    return DatasetManifest(
        classes=classes,
        records=tuple(records),
        flow_bound=float(meta.get("flow_bound", "20.0")),
        generator_version=meta.get("generator_version", "1"),
        global_seed=int(meta.get("global_seed", "0")),
    )


@dataclass(frozen=True)
class SplitSpec:
    split_id: int
    train_ids: frozenset[str]
    test_ids: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "train_ids", frozenset(self.train_ids))
        object.__setattr__(self, "test_ids", frozenset(self.test_ids))
        if self.train_ids & self.test_ids:
            raise ValueError("train and test sets overlap")


def make_splits(manifest: DatasetManifest, test_fraction: float = 0.3,
                seed: int = 0) -> list[SplitSpec]:
    """Three stratified train/test partitions.

    Stratification is per (class, source kind) group; each group
    contributes round(test_fraction * group size) test videos, at least 1.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must lie in (0, 1)")
    groups: dict[tuple[str, str], list[str]] = {}
    for r in manifest.records:
        groups.setdefault((r.class_name, r.source_kind), []).append(r.video_id)
    for (cls, kind), ids in groups.items():
        if len(ids) < 2:
            raise ValueError(f"class {cls!r} ({kind}) has fewer than 2 videos")
    splits = []
    for split_id in (1, 2, 3):
        train: set[str] = set()
        test: set[str] = set()
        for key in sorted(groups):
            ids = sorted(groups[key])
            rng = spawn_rng("split", seed, split_id, key[0], key[1])
            order = rng.permutation(len(ids))
            n_test = max(1, round(test_fraction * len(ids)))
            for rank, idx in enumerate(order):
                (test if rank < n_test else train).add(ids[idx])
        splits.append(SplitSpec(split_id, frozenset(train), frozenset(test)))
    return splits


def write_split(path, split: SplitSpec) -> None:
    lines = [f"{vid}\ttrain" for vid in sorted(split.train_ids)]
    lines += [f"{vid}\ttest" for vid in sorted(split.test_ids)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_split(path, split_id: int) -> SplitSpec:
    train: set[str] = set()
    test: set[str] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[1] not in ("train", "test"):
            raise ManifestError(f"{path}:{lineno}: expected 'video_id<TAB>train|test'")
        (train if parts[1] == "train" else test).add(parts[0])
    return SplitSpec(split_id, frozenset(train), frozenset(test))


def _nested_keep(ids: list[str], keep: int, rng_key: tuple) -> set[str]:
    """First `keep` ids of a seeded permutation; nested across keep values."""
    ids = sorted(ids)
    rng = spawn_rng(*rng_key)
    order = rng.permutation(len(ids))
    return {ids[idx] for idx in order[:keep]}


def subsample_real(split: SplitSpec, manifest: DatasetManifest,
                   keep_fraction: float, seed: int = 0) -> SplitSpec:
    """Drop real_like training videos down to a per-class fraction.

    Per class, round(keep_fraction * count) real_like training videos are
    retained via a seeded permutation prefix, so the kept sets are nested:
    a smaller fraction always keeps a subset of a larger one. Simplified
    videos and the test set are untouched.
    """
    if not (0.0 <= keep_fraction <= 1.0):
        raise ValueError("keep_fraction must lie in [0, 1]")
    by_id = manifest.by_id()
    per_class: dict[str, list[str]] = {}
    others: set[str] = set()
    for vid in split.train_ids:
        rec = by_id[vid]
        if rec.source_kind == "real_like":
            per_class.setdefault(rec.class_name, []).append(vid)
        else:
            others.add(vid)
    kept: set[str] = set(others)
    for cls in sorted(per_class):
        ids = per_class[cls]
        n_keep = round(keep_fraction * len(ids))
        kept |= _nested_keep(ids, n_keep, ("subsample_real", seed, split.split_id, cls))
    return SplitSpec(split.split_id, frozenset(kept), split.test_ids)


def subsample_synthetic(split: SplitSpec, manifest: DatasetManifest,
                        per_class_count: int | None, seed: int = 0) -> SplitSpec:
    """Cap simplified training videos at a per-class count (None keeps all).

    Uses the same nested permutation-prefix scheme as subsample_real, so
    count grids give comparable nested training sets.
    """
    if per_class_count is None:
        return split
    if per_class_count < 0:
        raise ValueError("per_class_count must be non-negative")
    by_id = manifest.by_id()
    per_class: dict[str, list[str]] = {}
    others: set[str] = set()
    for vid in split.train_ids:
        rec = by_id[vid]
        if rec.source_kind == "simplified":
            per_class.setdefault(rec.class_name, []).append(vid)
        else:
            others.add(vid)
    kept: set[str] = set(others)
    for cls in sorted(per_class):
        ids = per_class[cls]
        n_keep = min(per_class_count, len(ids))
        kept |= _nested_keep(ids, n_keep, ("subsample_synth", seed, split.split_id, cls))
    return SplitSpec(split.split_id, frozenset(kept), split.test_ids)


def verify_dataset_tree(root, manifest: DatasetManifest) -> list[str]:
    """Referential integrity scan: every record's files exist with the
    declared frame and flow counts. Returns a list of problems (empty when
    the tree is consistent)."""
    problems = []
    root = Path(root)
    for r in manifest.records:
        vdir = root / r.relative_path
        if not vdir.is_dir():
            problems.append(f"{r.video_id}: missing directory {r.relative_path}")
            continue
        for i in range(r.num_frames):
            if not (vdir / f"frame_{i:05d}.pgm").exists():
                problems.append(f"{r.video_id}: missing frame_{i:05d}.pgm")
        for i in range(r.num_frames - 1):
            for plane in ("x", "y"):
                if not (vdir / f"flow_{plane}_{i:05d}.pgm").exists():
                    problems.append(f"{r.video_id}: missing flow_{plane}_{i:05d}.pgm")
    return problems
