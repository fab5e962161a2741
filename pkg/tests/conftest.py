"""Shared fixtures: a tiny generated dataset reused across test modules."""

import pytest

from synthaction.flow import FlowParams
from synthaction.generate import ClassSpec, GenerationConfig, generate_dataset
from synthaction.manifest import make_splits, write_split

TINY_CLASSES = (ClassSpec("wave"), ClassSpec("jump"), ClassSpec("punch", 2))
TINY_FLOW = FlowParams(iterations_per_level=30, pyramid_levels=3,
                       warp_steps_per_level=2)


def tiny_configs(videos_per_class=6):
    common = dict(classes=TINY_CLASSES, videos_per_class=videos_per_class,
                  viewpoints_per_class=2, image_size=(48, 36),
                  duration_range=(2.0, 2.0))
    return [GenerationConfig(source_kind="real_like", **common),
            GenerationConfig(source_kind="simplified", **common)]


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """3 classes x 6 videos x 2 source kinds at 48x36, with flow and splits."""
    root = tmp_path_factory.mktemp("tiny_dataset")
    manifest = generate_dataset(tiny_configs(), root, global_seed=77,
                                flow_params=TINY_FLOW, threads=1)
    for split in make_splits(manifest, test_fraction=0.34, seed=77):
        write_split(root / f"split_{split.split_id}.tsv", split)
    return root, manifest
