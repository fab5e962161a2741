"""Software rasterizer for articulated figures.

Each bone is drawn as a screen-space capsule (projected segment with a
depth-scaled radius), depth sorted painter's style, shaded with a fixed
directional light plus ambient floor, and quantized to 8 bits right away
so all downstream files are byte-exact. Backgrounds are either blank
(pixel value 0) or a static textured plane placed behind the subject in
world space, so camera shake produces genuine background motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraConfig, camera_basis, sample_camera_track
from .seeding import spawn_rng
from .skeleton import MotionClip, Skeleton, forward_kinematics

LIGHT_DIR_WORLD = np.array([0.35, -0.75, -0.56])
LIGHT_DIR_WORLD = LIGHT_DIR_WORLD / np.linalg.norm(LIGHT_DIR_WORLD)
AMBIENT = 0.35
FLAT_BASE_VALUE = 215.0

LIGHTING_PRESETS = {"dark": 0.35, "shadow": 0.6, "bright": 1.0}

# bones ending at these joints are drawn thicker than the limb radius
_RADIUS_SCALE = {"spine": 1.9, "chest": 2.1, "neck": 1.1, "head": 1.7,
                 "l_hip": 1.6, "r_hip": 1.6}


@dataclass(frozen=True)
class LightingConfig:
    preset: str = "bright"            # dark | shadow | bright | custom
    intensity: float | None = None    # required for custom, derived otherwise
    per_frame_jitter: float = 0.0

    def __post_init__(self):
        if self.preset == "custom":
            if self.intensity is None:
                raise ValueError("custom lighting needs an explicit intensity")
        elif self.preset in LIGHTING_PRESETS:
            if self.intensity is None:
                object.__setattr__(self, "intensity", LIGHTING_PRESETS[self.preset])
        else:
            raise ValueError(f"unknown lighting preset {self.preset!r}")
        if not (0.0 < self.intensity <= 2.0):
            raise ValueError("intensity must lie in (0, 2]")
        if self.per_frame_jitter < 0:
            raise ValueError("per_frame_jitter must be non-negative")


@dataclass(frozen=True)
class Texture:
    """A static grayscale raster addressed by integer id."""
    texture_id: int
    pixels: np.ndarray  # (H, W) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.dtype != np.uint8:
            raise ValueError("texture pixels must be a 2-d uint8 array")
        object.__setattr__(self, "pixels", px)


def procedural_texture(texture_id: int, size: tuple[int, int] = (96, 96)) -> Texture:
    """Smooth mid-contrast noise texture, deterministic in texture_id."""
    h, w = size[1], size[0]
    rng = spawn_rng("texture", texture_id)
    img = rng.uniform(0.0, 1.0, size=(h, w))
    kernel = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
    for _ in range(3):
        img = _separable_blur_wrap(img, kernel)
    img -= img.min()
    peak = img.max()
    if peak > 0:
        img /= peak
    return Texture(texture_id, np.round(40.0 + 175.0 * img).astype(np.uint8))


def _separable_blur_wrap(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    r = len(kernel) // 2
    out = np.zeros_like(img)
    for k, wgt in enumerate(kernel):
        out += wgt * np.roll(img, k - r, axis=0)
    out2 = np.zeros_like(out)
    for k, wgt in enumerate(kernel):
        out2 += wgt * np.roll(out, k - r, axis=1)
    return out2


@dataclass(frozen=True)
class SceneConfig:
    background: Texture | None = None         # None -> blank (pixel value 0)
    character_texture: Texture | None = None   # None -> flat shading
    limb_radius: float = 0.07                  # meters
    background_distance: float = 2.5           # plane offset behind look_at, meters
    texture_px_per_m: float = 6.0

    def __post_init__(self):
        if self.limb_radius <= 0:
            raise ValueError("limb_radius must be positive")
        if self.background_distance <= 0:
            raise ValueError("background_distance must be positive")


@dataclass(frozen=True)
class Frame:
    width: int
    height: int
    channels: int
    pixels: np.ndarray  # (H, W) or (H, W, C) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        expected = (self.height, self.width) if self.channels == 1 else \
            (self.height, self.width, self.channels)
        if px.shape != expected or px.dtype != np.uint8:
            raise ValueError(f"pixel buffer must be uint8 with shape {expected}")
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, pixels: np.ndarray) -> "Frame":
        pixels = np.asarray(pixels, dtype=np.uint8)
        if pixels.ndim == 2:
            h, w = pixels.shape
            return cls(w, h, 1, pixels)
        h, w, c = pixels.shape
        return cls(w, h, c, pixels)


@dataclass(frozen=True)
class VideoTensor:
    frames: tuple[Frame, ...]
    fps: int
    metadata: dict = field(default_factory=dict)
    masks: tuple[np.ndarray, ...] | None = None  # per-frame foreground masks

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if len(frames) < 2:
            raise ValueError("a video needs at least 2 frames")
        w, h, c = frames[0].width, frames[0].height, frames[0].channels
        for f in frames[1:]:
            if (f.width, f.height, f.channels) != (w, h, c):
                raise ValueError("all frames must share dimensions and channels")
        if self.masks is not None:
            object.__setattr__(self, "masks", tuple(self.masks))
            if len(self.masks) != len(frames):
                raise ValueError("mask count must match frame count")

    @property
    def num_frames(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class BackgroundPlane:
    """Static world-space plane the textured background lives on."""
    origin: np.ndarray
    normal: np.ndarray
    ex: np.ndarray
    ey: np.ndarray

    @classmethod
    def behind_subject(cls, camera: CameraConfig, distance: float) -> "BackgroundPlane":
        right, up, forward = camera_basis(camera)
        origin = camera.look_at + forward * distance
        return cls(origin=origin, normal=-forward, ex=right, ey=up)


def _pixel_rays(camera: CameraConfig) -> np.ndarray:
    """World-space direction of every pixel's ray, shape (H, W, 3)."""
    right, up, forward = camera_basis(camera)
    w, h = camera.image_size
    us = (np.arange(w) + 0.5) - w / 2.0
    vs = h / 2.0 - (np.arange(h) + 0.5)
    uu, vv = np.meshgrid(us, vs)
    f = camera.focal_length_px
    dirs = (uu[..., None] * right + vv[..., None] * up + f * forward)
    return dirs


def _render_background(camera: CameraConfig, scene: SceneConfig,
                       plane: BackgroundPlane | None) -> np.ndarray:
    w, h = camera.image_size
    if scene.background is None:
        return np.zeros((h, w), dtype=np.uint8)
    if plane is None:
        plane = BackgroundPlane.behind_subject(camera, scene.background_distance)
    dirs = _pixel_rays(camera)
    denom = dirs @ plane.normal
    denom = np.where(np.abs(denom) < 1e-12, 1e-12, denom)
    tval = ((plane.origin - camera.position) @ plane.normal) / denom
    hits = camera.position + dirs * tval[..., None]
    rel = hits - plane.origin
    s = rel @ plane.ex
    t = rel @ plane.ey
    tex = scene.background.pixels
    th, tw = tex.shape
    cols = np.floor(s * scene.texture_px_per_m).astype(np.int64) % tw
    rows = np.floor(-t * scene.texture_px_per_m).astype(np.int64) % th
    img = tex[rows, cols].astype(np.float64)
    # rays pointing away from the plane (behind the camera) show nothing
    img[tval <= 0] = 0.0
    return np.round(img).astype(np.uint8)


def _gather_bones(skeleton: Skeleton, positions: np.ndarray,
                  limb_radius: float) -> list[tuple[np.ndarray, np.ndarray, float, int]]:
    bones = []
    for bone_idx, (p, c) in enumerate(skeleton.bones()):
        child = skeleton.joints[c]
        scale = _RADIUS_SCALE.get(child.name, 1.0)
        bones.append((positions[p], positions[c], limb_radius * scale, bone_idx))
    return bones


def render_frame(positions: np.ndarray, skeleton: Skeleton, camera: CameraConfig,
                 lighting: LightingConfig, scene: SceneConfig, *,
                 positions_b: np.ndarray | None = None,
                 background_plane: BackgroundPlane | None = None,
                 intensity_override: float | None = None,
                 return_mask: bool = False):
    """Rasterize one pose into a grayscale Frame.

    positions come from forward_kinematics of a matching skeleton; a second
    actor's positions may be passed so both figures share one depth sort.
    With return_mask=True also returns the boolean foreground mask.
    """
    w, h = camera.image_size
    intensity = lighting.intensity if intensity_override is None else intensity_override
    img = _render_background(camera, scene, background_plane).astype(np.float64)
    mask = np.zeros((h, w), dtype=bool)

    right, up, forward = camera_basis(camera)
    light_cam = np.array([LIGHT_DIR_WORLD @ right, LIGHT_DIR_WORLD @ up,
                          LIGHT_DIR_WORLD @ forward])

    bones = _gather_bones(skeleton, positions, scene.limb_radius)
    if positions_b is not None:
        bones += _gather_bones(skeleton, positions_b, scene.limb_radius)

    cam_bones = []
    for a_w, b_w, radius, bone_idx in bones:
        a_rel = a_w - camera.position
        b_rel = b_w - camera.position
        a = np.array([a_rel @ right, a_rel @ up, a_rel @ forward])
        b = np.array([b_rel @ right, b_rel @ up, b_rel @ forward])
        seg = _clip_to_near_plane(a, b, z_near=0.05)
        if seg is None:
            continue
        a, b = seg
        cam_bones.append((0.5 * (a[2] + b[2]), a, b, radius, bone_idx))
    cam_bones.sort(key=lambda item: (-item[0], item[4]))  # far to near

    f = camera.focal_length_px
    cx, cy = w / 2.0, h / 2.0
    tex = scene.character_texture
    for _, a, b, radius, bone_idx in cam_bones:
        ua, va = cx + f * a[0] / a[2], cy - f * a[1] / a[2]
        ub, vb = cx + f * b[0] / b[2], cy - f * b[1] / b[2]
        r_a, r_b = f * radius / a[2], f * radius / b[2]
        rmax = max(r_a, r_b)
        x0 = max(0, int(math.floor(min(ua, ub) - rmax - 1)))
        x1 = min(w, int(math.ceil(max(ua, ub) + rmax + 2)))
        y0 = max(0, int(math.floor(min(va, vb) - rmax - 1)))
        y1 = min(h, int(math.ceil(max(va, vb) + rmax + 2)))
        if x0 >= x1 or y0 >= y1:
            continue
        xs = np.arange(x0, x1) + 0.5
        ys = (np.arange(y0, y1) + 0.5)[:, None]
        dx, dy = ub - ua, vb - va
        seg_len2 = dx * dx + dy * dy
        if seg_len2 < 1e-12:
            t = np.zeros((y1 - y0, x1 - x0))
        else:
            t = ((xs - ua) * dx + (ys - va) * dy) / seg_len2
            t = np.clip(t, 0.0, 1.0)
        px_dist_x = xs - (ua + t * dx)
        px_dist_y = ys - (va + t * dy)
        dist = np.hypot(px_dist_x, px_dist_y)
        r_at = r_a + t * (r_b - r_a)
        inside = dist <= r_at
        if not inside.any():
            continue
        frac = np.where(r_at > 0, np.minimum(dist / np.maximum(r_at, 1e-9), 1.0), 1.0)
        bulge = np.sqrt(np.maximum(0.0, 1.0 - frac * frac))
        safe_dist = np.maximum(dist, 1e-9)
        nx = (px_dist_x / safe_dist) * frac
        ny = -(px_dist_y / safe_dist) * frac  # image v grows downward
        lambert = np.maximum(0.0, -(nx * light_cam[0] + ny * light_cam[1]
                                    - bulge * light_cam[2]))
        if tex is None:
            base = FLAT_BASE_VALUE
        else:
            tp = tex.pixels
            th, tw = tp.shape
            tcol = np.floor(t * 4.0 * tw).astype(np.int64) % tw
            trow = np.floor((frac * np.sign(px_dist_y) * 2.0 + bone_idx * 5.0) * 4.0
                            ).astype(np.int64) % th
            base = tp[trow, tcol].astype(np.float64)
        shade = np.clip(np.round(base * intensity * (AMBIENT + (1.0 - AMBIENT) * lambert)),
                        0.0, 255.0)
        region = img[y0:y1, x0:x1]
        region[inside] = shade[inside]
        mask[y0:y1, x0:x1] |= inside

    frame = Frame.from_array(np.round(img).astype(np.uint8))
    if return_mask:
        return frame, mask
    return frame


def _clip_to_near_plane(a: np.ndarray, b: np.ndarray, z_near: float):
    """Clip a camera-space segment against z = z_near; None if fully behind."""
    za, zb = a[2], b[2]
    if za <= z_near and zb <= z_near:
        return None
    if za > z_near and zb > z_near:
        return a, b
    t = (z_near - za) / (zb - za)
    cut = a + t * (b - a)
    if za <= z_near:
        return cut, b
    return a, cut


def lighting_intensity_for_frame(lighting: LightingConfig, light_seed: int,
                                 frame_index: int) -> float:
    """Preset intensity plus seeded uniform per-frame jitter, clamped to (0, 2]."""
    if lighting.per_frame_jitter == 0.0:
        return lighting.intensity
    rng = spawn_rng("light", light_seed, frame_index)
    jit = rng.uniform(-lighting.per_frame_jitter, lighting.per_frame_jitter)
    return float(np.clip(lighting.intensity + jit, 0.05, 2.0))


def render_clip(clip: MotionClip, skeleton: Skeleton, camera: CameraConfig,
                lighting: LightingConfig, scene: SceneConfig,
                light_seed: int = 0) -> VideoTensor:
    """Render every pose of a clip with per-frame camera shake and lighting jitter.

    Deterministic for fixed configs and seeds; foreground masks for every
    frame ride along on the returned VideoTensor.
    """
    roots = np.stack([pose.root_translation for pose in clip.frames])
    track = sample_camera_track(camera, clip.num_frames, roots)
    plane = (BackgroundPlane.behind_subject(camera, scene.background_distance)
             if scene.background is not None else None)
    frames: list[Frame] = []
    masks: list[np.ndarray] = []
    for i, pose in enumerate(clip.frames):
        positions = forward_kinematics(skeleton, pose)
        positions_b = None
        if clip.actor_count == 2:
            positions_b = forward_kinematics(skeleton, clip.frames_b[i])
        intensity = lighting_intensity_for_frame(lighting, light_seed, i)
        frame, mask = render_frame(
            positions, skeleton, track[i], lighting, scene,
            positions_b=positions_b, background_plane=plane,
            intensity_override=intensity, return_mask=True)
        frames.append(frame)
        masks.append(mask)
    metadata = {
        "action": clip.action_label,
        "variant_id": clip.variant_id,
        "actor_count": clip.actor_count,
        "camera": camera,
        "lighting": lighting,
        "scene": scene,
        "shake_seed": camera.shake_seed,
        "light_seed": light_seed,
    }
    return VideoTensor(frames=tuple(frames), fps=clip.fps, metadata=metadata,
                       masks=tuple(masks))
