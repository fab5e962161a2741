"""BVH 1.0 motion file parsing and serialization.

Only the text BVH format is supported: a HIERARCHY section of nested
ROOT/JOINT/End Site blocks with OFFSET and CHANNELS declarations, then a
MOTION section with one whitespace-separated float line per frame.
Channel arity must be 3 (rotations) or 6 (position + rotations); the
declared rotation order is honored when converting to quaternions.

End Sites are kept as regular joints named "<parent>_end" so their offsets
survive forward kinematics; they carry identity rotations.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .skeleton import (
    MotionClip,
    Pose,
    QUAT_IDENTITY,
    Joint,
    Skeleton,
    matrix_to_euler_zxy,
    quat_from_euler,
    quat_to_matrix,
)


class BvhError(ValueError):
    """Malformed BVH input; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class _Node:
    name: str
    parent: int | None
    offset: np.ndarray
    rot_order: str = ""      # "" for End Sites
    has_position: bool = False
    is_end_site: bool = False


class _Tokens:
    """Token stream that remembers the current line for error messages."""

    def __init__(self, text: str):
        self._items: list[tuple[str, int]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            for tok in line.split():
                self._items.append((tok, lineno))
        self._pos = 0
        self.line = 0

    def peek(self) -> str | None:
        if self._pos >= len(self._items):
            return None
        return self._items[self._pos][0]

    def next(self, expect: str | None = None) -> str:
        if self._pos >= len(self._items):
            raise BvhError("unexpected end of file", self.line or None)
        tok, self.line = self._items[self._pos]
        self._pos += 1
        if expect is not None and tok.upper() != expect.upper():
            raise BvhError(f"expected {expect!r}, got {tok!r}", self.line)
        return tok

    def next_float(self) -> float:
        tok = self.next()
        try:
            return float(tok)
        except ValueError:
            raise BvhError(f"expected a number, got {tok!r}", self.line) from None


def parse_bvh(source) -> tuple[Skeleton, MotionClip]:
    """Parse BVH text (a string or text stream) into a skeleton and clip.

    The clip's fps is round(1 / FrameTime). The root's OFFSET is folded
    into every frame's root translation so forward kinematics places the
    root exactly at the pose translation.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    toks = _Tokens(text)

    toks.next(expect="HIERARCHY")
    nodes: list[_Node] = []
    _parse_node(toks, nodes, parent=None, is_root=True)

    toks.next(expect="MOTION")
    toks.next(expect="Frames:")
    try:
        declared_frames = int(toks.next())
    except ValueError:
        raise BvhError("Frames: expects an integer", toks.line) from None
    ft_tok = toks.next()
    if ft_tok.upper() == "FRAME":
        toks.next(expect="Time:")
    elif ft_tok.upper() != "FRAME TIME:":
        raise BvhError(f"expected 'Frame Time:', got {ft_tok!r}", toks.line)
    frame_time = toks.next_float()
    if frame_time <= 0:
        raise BvhError(f"FrameTime must be positive, got {frame_time}", toks.line)
    fps = int(round(1.0 / frame_time))

    channels_per_node = [(6 if n.has_position else 3) if not n.is_end_site else 0
                         for n in nodes]
    total_channels = sum(channels_per_node)

    values: list[float] = []
    while toks.peek() is not None:
        values.append(toks.next_float())
    if len(values) != declared_frames * total_channels:
        raise BvhError(
            f"MOTION declares {declared_frames} frames of {total_channels} channels "
            f"but provides {len(values)} values")
    data = np.asarray(values, dtype=np.float64).reshape(declared_frames, total_channels)

    root_offset = nodes[0].offset
    frames: list[Pose] = []
    for row in data:
        cursor = 0
        rotations = np.tile(QUAT_IDENTITY, (len(nodes), 1))
        translation = root_offset.copy()
        for i, node in enumerate(nodes):
            if node.is_end_site:
                continue
            if node.has_position:
                translation = root_offset + row[cursor:cursor + 3]
                cursor += 3
            angles = row[cursor:cursor + 3]
            cursor += 3
            rotations[i] = quat_from_euler(node.rot_order, angles)
        frames.append(Pose(translation, rotations))

    joints = tuple(Joint(n.name, n.parent, n.offset if n.parent is not None
                         else np.zeros(3)) for n in nodes)
    skeleton = Skeleton(joints=joints, root_index=0)
    clip = MotionClip(skeleton_id=nodes[0].name, fps=fps, frames=tuple(frames),
                      action_label="bvh", variant_id=0, actor_count=1)
    return skeleton, clip


def _parse_node(toks: _Tokens, nodes: list[_Node], parent: int | None,
                is_root: bool) -> None:
    kw = toks.next()
    kind = kw.upper()
    if is_root:
        if kind != "ROOT":
            raise BvhError(f"expected ROOT, got {kw!r}", toks.line)
    elif kind not in ("JOINT", "END"):
        raise BvhError(f"expected JOINT or End Site, got {kw!r}", toks.line)

    if kind == "END":
        site = toks.next()
        if site.upper() != "SITE":
            raise BvhError(f"expected 'End Site', got 'End {site}'", toks.line)
        name = nodes[parent].name + "_end"
        toks.next(expect="{")
        toks.next(expect="OFFSET")
        offset = np.array([toks.next_float() for _ in range(3)])
        toks.next(expect="}")
        nodes.append(_Node(name=name, parent=parent, offset=offset, is_end_site=True))
        return

    name = toks.next()
    toks.next(expect="{")
    toks.next(expect="OFFSET")
    offset = np.array([toks.next_float() for _ in range(3)])
    toks.next(expect="CHANNELS")
    try:
        arity = int(toks.next())
    except ValueError:
        raise BvhError("CHANNELS expects a count", toks.line) from None
    if arity not in (3, 6):
        raise BvhError(f"unsupported channel arity {arity} (only 3 or 6)", toks.line)
    channels = [toks.next() for _ in range(arity)]
    has_position = arity == 6
    if has_position:
        pos = [c.lower() for c in channels[:3]]
        if sorted(pos) != ["xposition", "yposition", "zposition"]:
            raise BvhError(f"6-channel node must start with X/Y/Z position, got {channels[:3]}",
                           toks.line)
        if pos != ["xposition", "yposition", "zposition"]:
            raise BvhError("position channels must be in X Y Z order", toks.line)
    rot = channels[3:] if has_position else channels
    order = ""
    for c in rot:
        lc = c.lower()
        if not lc.endswith("rotation") or lc[0].upper() not in "XYZ":
            raise BvhError(f"bad rotation channel {c!r}", toks.line)
        order += lc[0].upper()
    if len(set(order)) != 3:
        raise BvhError(f"rotation channels must name three distinct axes, got {rot}",
                       toks.line)

    index = len(nodes)
    nodes.append(_Node(name=name, parent=parent, offset=offset, rot_order=order,
                       has_position=has_position))
    has_child = False
    while True:
        nxt = toks.peek()
        if nxt is None:
            raise BvhError("unterminated block", toks.line)
        if nxt == "}":
            toks.next()
            break
        _parse_node(toks, nodes, parent=index, is_root=False)
        has_child = True
    if not has_child:
        raise BvhError(f"joint {name!r} has no children and no End Site", toks.line)


def dump_bvh(skeleton: Skeleton, clip: MotionClip) -> str:
    """Serialize to BVH text with ZXY rotation channels.

    Round trip guarantee: parse_bvh(dump_bvh(s, c)) yields identical
    forward-kinematics positions for every joint of every frame (up to
    float formatting, below 1e-5 scene units). Childless joints not
    already named as end sites gain a zero-offset End Site block.
    """
    children: dict[int, list[int]] = {i: [] for i in range(skeleton.num_joints)}
    for i, j in enumerate(skeleton.joints):
        if j.parent is not None:
            children[j.parent].append(i)

    emitted: list[int] = []  # joints with channels, in emission order
    out = io.StringIO()
    out.write("HIERARCHY\n")

    def fmt(v: float) -> str:
        return f"{v:.6f}"

    def write_node(idx: int, depth: int) -> None:
        joint = skeleton.joints[idx]
        pad = "\t" * depth
        kids = children[idx]
        is_end = joint.parent is not None and not kids and joint.name.endswith("_end")
        if is_end:
            out.write(f"{pad}End Site\n{pad}{{\n")
            out.write(f"{pad}\tOFFSET {' '.join(fmt(v) for v in joint.offset)}\n")
            out.write(f"{pad}}}\n")
            return
        kw = "ROOT" if joint.parent is None else "JOINT"
        out.write(f"{pad}{kw} {joint.name}\n{pad}{{\n")
        out.write(f"{pad}\tOFFSET {' '.join(fmt(v) for v in joint.offset)}\n")
        if joint.parent is None:
            out.write(f"{pad}\tCHANNELS 6 Xposition Yposition Zposition "
                      "Zrotation Xrotation Yrotation\n")
        else:
            out.write(f"{pad}\tCHANNELS 3 Zrotation Xrotation Yrotation\n")
        emitted.append(idx)
        for kid in kids:
            write_node(kid, depth + 1)
        if not kids:
            out.write(f"{pad}\tEnd Site\n{pad}\t{{\n")
            out.write(f"{pad}\t\tOFFSET 0.000000 0.000000 0.000000\n")
            out.write(f"{pad}\t}}\n")
        out.write(f"{pad}}}\n")

    write_node(skeleton.root_index, 0)

    out.write("MOTION\n")
    out.write(f"Frames: {clip.num_frames}\n")
    out.write(f"Frame Time: {1.0 / clip.fps:.8f}\n")
    for pose in clip.frames:
        row: list[str] = [fmt(v) for v in pose.root_translation]
        for idx in emitted:
            z, x, y = matrix_to_euler_zxy(quat_to_matrix(pose.joint_rotations[idx]))
            row.extend((fmt(z), fmt(x), fmt(y)))
        out.write(" ".join(row) + "\n")
    return out.getvalue()
