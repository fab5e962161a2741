"""Bit-exact binary PGM (P5) and PPM (P6) readers and a PGM writer.

The writer emits exactly ``P5\\n<width> <height>\\n255\\n`` followed by the
row-major payload, so identical pixel data always produces identical files.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np


class PnmError(ValueError):
    """Malformed PNM header or truncated payload."""


def write_pgm(path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise ValueError("write_pgm expects a 2-d uint8 array")
    h, w = pixels.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())


def _read_header_tokens(fh, count: int) -> list[bytes]:
    """Read whitespace-separated header tokens, honoring '#' comments."""
    tokens: list[bytes] = []
    current = b""
    while len(tokens) < count:
        ch = fh.read(1)
        if not ch:
            raise PnmError("unexpected end of file in header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        if ch.isspace():
            if current:
                tokens.append(current)
                current = b""
        else:
            current += ch
    return tokens


def _read_pnm(path, magic: bytes, channels: int) -> np.ndarray:
    with open(path, "rb") as fh:
        got = fh.read(2)
        if got != magic:
            raise PnmError(f"expected {magic.decode()} file, got magic {got!r}")
        w_tok, h_tok, maxval_tok = _read_header_tokens(fh, 3)
        try:
            w, h, maxval = int(w_tok), int(h_tok), int(maxval_tok)
        except ValueError:
            raise PnmError("non-numeric header field") from None
        if w <= 0 or h <= 0:
            raise PnmError(f"bad dimensions {w}x{h}")
        if maxval != 255:
            raise PnmError(f"only maxval 255 is supported, got {maxval}")
        payload = fh.read(w * h * channels)
        if len(payload) != w * h * channels:
            raise PnmError(f"truncated payload: expected {w * h * channels} bytes, "
                           f"got {len(payload)}")
    arr = np.frombuffer(payload, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(h, w).copy()
    return arr.reshape(h, w, channels).copy()


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into a (H, W) uint8 array."""
    return _read_pnm(path, b"P5", 1)


def read_ppm(path) -> np.ndarray:
    """Read a binary PPM into a (H, W, 3) uint8 array."""
    return _read_pnm(path, b"P6", 3)


def read_texture_file(path) -> np.ndarray:
    """Read a PGM or PPM texture as grayscale (PPM converted by luma weights)."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"P5":
        return read_pgm(path)
    if magic == b"P6":
        rgb = read_ppm(path).astype(np.float64)
        gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
        return np.round(gray).astype(np.uint8)
    raise PnmError(f"unsupported texture magic {magic!r} in {Path(path).name}")
