"""Synthetic articulated-figure action videos, dense optical flow, and
temporal-segment classification, all at desk scale."""

from .actions import ACTIONS, ProceduralActionSpec, build_humanoid, \
    generate_procedural_clip
from .bvh import BvhError, dump_bvh, parse_bvh
from .camera import CameraConfig, project_point, sample_camera_track
from .classifier import StreamClassifier, load_checkpoint, save_checkpoint
from .features import FlowHistogramFeatures, IntensityHistogramFeatures
from .flow import EncodedFlow, FlowField, FlowParams, WarpEnergyTrace, \
    decode_flow, encode_flow, estimate_flow, estimate_flow_sequence, \
    estimate_flow_with_energy_trace, flow_energy, foreground_epe, mean_magnitude
from .fusion import evaluate, fuse_scores, predict_video
from .generate import ClassSpec, GenerationConfig, generate_dataset
from .manifest import DatasetManifest, SplitSpec, VideoRecord, make_splits, \
    read_manifest, subsample_real, write_manifest
from .pgm import read_pgm, read_ppm, write_pgm
from .render import Frame, LightingConfig, SceneConfig, VideoTensor, render_clip, \
    render_frame
from .sampling import SegmentSampler, sample_segments
from .skeleton import Joint, MotionClip, Pose, Skeleton, forward_kinematics

__version__ = "0.1.0"

__all__ = [
    "ACTIONS", "BvhError", "CameraConfig", "ClassSpec", "DatasetManifest",
    "EncodedFlow", "FlowField", "FlowHistogramFeatures", "FlowParams", "Frame",
    "GenerationConfig", "IntensityHistogramFeatures", "Joint", "LightingConfig",
    "MotionClip", "Pose", "ProceduralActionSpec", "SceneConfig", "SegmentSampler",
    "Skeleton", "SplitSpec", "StreamClassifier", "VideoRecord", "VideoTensor",
    "WarpEnergyTrace",
    "build_humanoid", "decode_flow", "dump_bvh", "encode_flow", "estimate_flow",
    "estimate_flow_sequence", "estimate_flow_with_energy_trace",
    "evaluate", "flow_energy", "foreground_epe", "forward_kinematics",
    "mean_magnitude",
    "fuse_scores", "generate_dataset", "generate_procedural_clip", "load_checkpoint",
    "make_splits", "parse_bvh", "predict_video", "project_point", "read_manifest",
    "read_pgm", "read_ppm", "render_clip", "render_frame", "sample_camera_track",
    "sample_segments", "save_checkpoint", "subsample_real", "write_manifest",
    "write_pgm",
]
