"""Dataset generation: motion -> render -> flow -> files, fully seeded.

Every video is generated independently from a seed derived by hashing
(global seed, source kind, class, index), so generation parallelizes
across videos with byte-identical results for any worker count. The
manifest is written last, after all records are on disk.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .actions import ACTIONS, GENERATED_FPS, ProceduralActionSpec, \
    build_humanoid, generate_procedural_clip
from .camera import CameraConfig
from .flow import FlowParams, encode_flow, estimate_flow_sequence, to_gray
from .manifest import DatasetManifest, VideoRecord, write_manifest
from .pgm import write_pgm
from .render import LightingConfig, SceneConfig, VideoTensor, procedural_texture, \
    render_clip
from .seeding import spawn_rng, stable_seed

SUBJECT_CENTER = np.array([0.0, 0.95, 0.0])
CAMERA_DISTANCE = 3.2
CAMERA_HEIGHT = 1.15
_NUM_BACKGROUND_TEXTURES = 8
_NUM_CHARACTER_TEXTURES = 4


@dataclass(frozen=True)
class ClassSpec:
    action_name: str
    actor_count: int = 1

    def __post_init__(self):
        if self.action_name not in ACTIONS:
            raise ValueError(f"unknown action {self.action_name!r}")
        if self.actor_count not in (1, 2):
            raise ValueError("actor_count must be 1 or 2")

    @classmethod
    def parse(cls, token: str) -> "ClassSpec":
        """Parse 'name' or 'name:2' tokens from config files."""
        name, _, count = token.strip().partition(":")
        return cls(name, int(count) if count else 1)


DEFAULT_CLASSES = tuple(
    ClassSpec(name, 2 if name == "punch" else 1) for name in
    ("wave", "jump", "squat", "run_in_place", "punch", "kick", "bow", "spin")
)


@dataclass(frozen=True)
class GenerationConfig:
    source_kind: str
    classes: tuple[ClassSpec, ...] = DEFAULT_CLASSES
    videos_per_class: int = 40
    viewpoints_per_class: int = 4
    lighting_presets: tuple[str, ...] = ("bright", "shadow", "dark")
    shake_amplitudes: tuple[float, ...] = (0.008, 0.015, 0.025)
    image_size: tuple[int, int] = (64, 48)
    fps: int = GENERATED_FPS
    duration_range: tuple[float, float] = (2.0, 2.2)

    def __post_init__(self):
        if self.source_kind not in ("real_like", "simplified"):
            raise ValueError("source_kind must be real_like or simplified")
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "lighting_presets", tuple(self.lighting_presets))
        object.__setattr__(self, "shake_amplitudes", tuple(self.shake_amplitudes))
        if not self.classes:
            raise ValueError("at least one class is required")
        if self.videos_per_class < 1:
            raise ValueError("videos_per_class must be positive")
        if self.viewpoints_per_class < 1:
            raise ValueError("viewpoints_per_class must be positive")
        lo, hi = self.duration_range
        if not (2.0 <= lo <= hi <= 6.0):
            raise ValueError("duration_range must lie within [2, 6] seconds")
        if self.fps != GENERATED_FPS:
            raise ValueError(f"generated clips run at {GENERATED_FPS} fps")


@dataclass(frozen=True)
class _VideoPlan:
    video_id: str
    class_name: str
    class_index: int
    source_kind: str
    actor_count: int
    seed: int
    index_in_class: int
    viewpoint: int
    viewpoints_total: int
    lighting_preset: str
    shake_amplitude: float
    image_size: tuple[int, int]
    duration_range: tuple[float, float]
    relative_path: str


def _viewpoint_camera(plan: _VideoPlan) -> CameraConfig:
    """Cameras fan across a frontal arc; a single viewpoint looks head on."""
    v, total = plan.viewpoint, plan.viewpoints_total
    azimuth = 0.0 if total == 1 else math.radians(-75.0 + 150.0 * v / (total - 1))
    x = CAMERA_DISTANCE * math.sin(azimuth)
    z = CAMERA_DISTANCE * math.cos(azimuth)
    w, h = plan.image_size
    focal = w  # ~53 degree horizontal field of view
    shake = plan.shake_amplitude if plan.source_kind == "real_like" else 0.0
    return CameraConfig(
        position=(x, CAMERA_HEIGHT, z), look_at=tuple(SUBJECT_CENTER),
        focal_length_px=focal, image_size=plan.image_size, mode="fixed",
        shake_amplitude=shake, shake_seed=stable_seed("cam", plan.seed))


def _scene_for(plan: _VideoPlan) -> SceneConfig:
    if plan.source_kind == "simplified":
        return SceneConfig(background=None, character_texture=None, limb_radius=0.08)
    bg_id = (plan.index_in_class + 3 * plan.class_index) % _NUM_BACKGROUND_TEXTURES
    char_id = 100 + plan.index_in_class % _NUM_CHARACTER_TEXTURES
    return SceneConfig(background=procedural_texture(bg_id),
                       character_texture=procedural_texture(char_id),
                       limb_radius=0.08)


def render_plan_video(plan: _VideoPlan) -> VideoTensor:
    """Deterministically realize one planned video in memory."""
    rng = spawn_rng("style", plan.seed)
    duration = float(rng.uniform(*plan.duration_range))
    spec = ProceduralActionSpec(
        action_name=plan.class_name,
        speed_scale=float(rng.uniform(0.8, 1.3)),
        amplitude_scale=float(rng.uniform(0.85, 1.25)),
        duration_s=duration,
        seed=plan.seed,
    )
    clip = generate_procedural_clip(spec, actor_count=plan.actor_count)
    camera = _viewpoint_camera(plan)
    lighting = LightingConfig(plan.lighting_preset, per_frame_jitter=0.03)
    scene = _scene_for(plan)
    skeleton = build_humanoid()
    return render_clip(clip, skeleton, camera, lighting, scene,
                       light_seed=stable_seed("jitter", plan.seed))


def _write_video(args) -> VideoRecord:
    plan, out_dir, flow_params, flow_bound = args
    video = render_plan_video(plan)
    vdir = Path(out_dir) / plan.relative_path
    vdir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(video.frames):
        write_pgm(vdir / f"frame_{i:05d}.pgm", frame.pixels)
    if flow_params is not None:
        grays = [to_gray(f.pixels) for f in video.frames]
        for i, flow in enumerate(estimate_flow_sequence(grays, flow_params)):
            enc = encode_flow(flow, flow_bound)
            write_pgm(vdir / f"flow_x_{i:05d}.pgm", enc.x_plane)
            write_pgm(vdir / f"flow_y_{i:05d}.pgm", enc.y_plane)
    return VideoRecord(
        video_id=plan.video_id, class_name=plan.class_name,
        class_index=plan.class_index, source_kind=plan.source_kind,
        num_frames=video.num_frames, fps=video.fps, seed=plan.seed,
        relative_path=plan.relative_path)


def build_plans(configs, global_seed: int) -> tuple[tuple[str, ...], list[_VideoPlan]]:
    """Expand generation configs into per-video plans.

    Class order follows first appearance across configs; style combinations
    (viewpoint x lighting x shake) cycle deterministically over the video
    index within each class.
    """
    if isinstance(configs, GenerationConfig):
        configs = [configs]
    classes: list[str] = []
    for cfg in configs:
        for spec in cfg.classes:
            if spec.action_name not in classes:
                classes.append(spec.action_name)
    plans: list[_VideoPlan] = []
    prefix = {"real_like": "real", "simplified": "simp"}
    for cfg in configs:
        for spec in cfg.classes:
            cls_idx = classes.index(spec.action_name)
            for vi in range(cfg.videos_per_class):
                vid = f"{prefix[cfg.source_kind]}_{spec.action_name}_{vi:03d}"
                plans.append(_VideoPlan(
                    video_id=vid,
                    class_name=spec.action_name,
                    class_index=cls_idx,
                    source_kind=cfg.source_kind,
                    actor_count=spec.actor_count,
                    seed=stable_seed(global_seed, cfg.source_kind,
                                     spec.action_name, vi),
                    index_in_class=vi,
                    viewpoint=vi % cfg.viewpoints_per_class,
                    viewpoints_total=cfg.viewpoints_per_class,
                    lighting_preset=cfg.lighting_presets[vi % len(cfg.lighting_presets)],
                    shake_amplitude=cfg.shake_amplitudes[vi % len(cfg.shake_amplitudes)],
                    image_size=cfg.image_size,
                    duration_range=cfg.duration_range,
                    relative_path=f"{spec.action_name}/{vid}",
                ))
    return tuple(classes), plans


def generate_dataset(configs, out_dir, global_seed: int = 0,
                     flow_params: FlowParams | None = FlowParams(),
                     flow_bound: float = 20.0, threads: int = 1,
                     progress=None) -> DatasetManifest:
    """Generate all videos of one or more configs into out_dir.

    Returns the manifest, which is also written to <out_dir>/manifest.tsv
    once every video is complete. flow_params=None skips flow extraction
    (the flow command fills it in later). Deterministic for a fixed
    (configs, global_seed, flow settings) regardless of thread count.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    classes, plans = build_plans(configs, global_seed)
    jobs = [(plan, str(out), flow_params, flow_bound) for plan in plans]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_write_video, jobs, chunksize=4))
    else:
        records = []
        for i, job in enumerate(jobs):
            records.append(_write_video(job))
            if progress is not None:
                progress(i + 1, len(jobs))
    manifest = DatasetManifest(classes=classes, records=tuple(records),
                               flow_bound=flow_bound, generator_version="1",
                               global_seed=global_seed)
    write_manifest(out / "manifest.tsv", manifest)
    return manifest


def extract_flow_for_dataset(root, manifest: DatasetManifest,
                             flow_params: FlowParams = FlowParams(),
                             force: bool = False, threads: int = 1) -> int:
    """(Re)compute encoded flow files for every video; returns the number
    of videos processed. Existing flow files are kept unless force is set."""
    root = Path(root)
    jobs = []
    for rec in manifest.records:
        vdir = root / rec.relative_path
        last_x = vdir / f"flow_x_{rec.num_frames - 2:05d}.pgm"
        if force or not last_x.exists():
            jobs.append((str(vdir), rec.num_frames, flow_params, manifest.flow_bound))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            list(pool.map(_flow_for_video, jobs, chunksize=4))
    else:
        for job in jobs:
            _flow_for_video(job)
    return len(jobs)


def _flow_for_video(args) -> None:
    from .pgm import read_pgm
    vdir, num_frames, flow_params, bound = args
    vdir = Path(vdir)
    grays = [to_gray(read_pgm(vdir / f"frame_{i:05d}.pgm")) for i in range(num_frames)]
    for i, flow in enumerate(estimate_flow_sequence(grays, flow_params)):
        enc = encode_flow(flow, bound)
        write_pgm(vdir / f"flow_x_{i:05d}.pgm", enc.x_plane)
        write_pgm(vdir / f"flow_y_{i:05d}.pgm", enc.y_plane)
