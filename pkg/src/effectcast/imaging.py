"""Raster image and mask primitives plus the geometry every mask is built from.

Conventions fixed repo-wide:

- ``Frame`` pixels are row-major RGB uint8, shape ``(height, width, 3)``.
- ``Mask`` bits are row-major booleans; True means "regenerate this pixel",
  False means "preserve it". No other polarity exists anywhere in the repo.
- ``Box`` coordinates are half-open: ``[x_min, x_max) x [y_min, y_max)``.
- Polygon fill tests the pixel *center* ``(x + 0.5, y + 0.5)`` under the
  even-odd rule, so results are deterministic and match a per-pixel oracle.

All operations are pure; Frame/Mask buffers are copied on construction and
marked read-only, so values are safe to share across threads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import GeometryError, UnsupportedResizeError

__all__ = [
    "Frame",
    "Mask",
    "Box",
    "Polygon",
    "rasterize_box",
    "rasterize_polygon",
    "union",
    "dilate",
    "resize_frame",
    "downsample_mask",
    "coverage",
    "load_frame",
    "save_frame",
    "load_mask",
    "save_mask",
    "encode_frame_png",
    "decode_frame_png",
    "encode_mask_png",
    "decode_mask_png",
    "nearest_upscale",
    "nearest_upscale_mask",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Frame:
    """RGB 8-bit raster with explicit dimensions."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame dimensions must be >= 1, got {self.width}x{self.height}")
        arr = np.asarray(self.pixels)
        if arr.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixel buffer shape {arr.shape} does not match "
                f"(height, width, 3) = ({self.height}, {self.width}, 3)"
            )
        if arr.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {arr.dtype}")
        object.__setattr__(self, "pixels", _frozen(arr))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Frame":
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) array, got shape {arr.shape}")
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)

    @classmethod
    def filled(cls, width: int, height: int, color: tuple[int, int, int]) -> "Frame":
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[:] = color
        return cls(width=width, height=height, pixels=arr)

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and bool(np.array_equal(self.pixels, other.pixels))
        )


@dataclass(frozen=True, eq=False)
class Mask:
    """Boolean raster aligned to a Frame; True = regenerate, False = preserve."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"mask dimensions must be >= 1, got {self.width}x{self.height}")
        arr = np.asarray(self.bits)
        if arr.shape != (self.height, self.width):
            raise ValueError(
                f"bit buffer shape {arr.shape} does not match "
                f"(height, width) = ({self.height}, {self.width})"
            )
        if arr.dtype != np.bool_:
            raise ValueError(f"bits must be boolean, got {arr.dtype}")
        object.__setattr__(self, "bits", _frozen(arr))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Mask":
        arr = np.asarray(arr, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"expected (H, W) array, got shape {arr.shape}")
        return cls(width=arr.shape[1], height=arr.shape[0], bits=arr)

    @classmethod
    def blank(cls, width: int, height: int, value: bool = False) -> "Mask":
        return cls.from_array(np.full((height, width), value, dtype=bool))

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and bool(np.array_equal(self.bits, other.bits))
        )


@dataclass(frozen=True)
class Box:
    """Half-open pixel rectangle ``[x_min, x_max) x [y_min, y_max)``."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min < 0 or self.y_min < 0:
            raise GeometryError(f"box has negative origin: {self}")
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise GeometryError(f"degenerate box (empty extent): {self}")

    @property
    def area(self) -> int:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class Polygon:
    """Ordered pixel-coordinate outline, at least 3 vertices."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise GeometryError(f"polygon needs >= 3 vertices, got {len(verts)}")
        object.__setattr__(self, "vertices", verts)


def rasterize_box(box: Box, width: int, height: int) -> Mask:
    """Mask with exactly the pixels inside ``box`` set True.

    Raises GeometryError if the box extends past the canvas.
    """
    if box.x_max > width or box.y_max > height:
        raise GeometryError(f"box {box} exceeds canvas {width}x{height}")
    bits = np.zeros((height, width), dtype=bool)
    bits[box.y_min : box.y_max, box.x_min : box.x_max] = True
    return Mask(width=width, height=height, bits=bits)


def rasterize_polygon(polygon: Polygon, width: int, height: int) -> Mask:
    """Fill a polygon: pixel True iff its center is inside under even-odd.

    Crossing-number test against each edge, evaluated for every pixel center
    at once. The comparison and intersection expressions are kept identical
    to the classic scalar point-in-polygon formulation so a brute-force
    oracle reproduces this bit-for-bit.
    """
    for x, y in polygon.vertices:
        if not (0.0 <= x <= width and 0.0 <= y <= height):
            raise GeometryError(
                f"vertex ({x}, {y}) outside canvas [0, {width}] x [0, {height}]"
            )
    cx = (np.arange(width, dtype=np.float64) + 0.5)[None, :]
    cy = (np.arange(height, dtype=np.float64) + 0.5)[:, None]
    inside = np.zeros((height, width), dtype=bool)
    verts = polygon.vertices
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        crosses = (y1 > cy) != (y2 > cy)
        if not crosses.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = (x2 - x1) * (cy - y1) / (y2 - y1) + x1
        inside ^= crosses & (cx < x_at)
    return Mask(width=width, height=height, bits=inside)


def union(masks: Sequence[Mask]) -> Mask:
    """Bitwise OR of equally sized masks; the list must be non-empty."""
    if not masks:
        raise ValueError("union of an empty mask list is undefined")
    first = masks[0]
    for m in masks[1:]:
        if (m.width, m.height) != (first.width, first.height):
            raise ValueError(
                f"mask dimension mismatch: {m.width}x{m.height} vs "
                f"{first.width}x{first.height}"
            )
    bits = np.logical_or.reduce([m.bits for m in masks])
    return Mask(width=first.width, height=first.height, bits=bits)


def dilate(mask: Mask, radius: int) -> Mask:
    """Grow the true region by ``radius`` in the Chebyshev (square) metric.

    Separable: smear along rows, then columns; the (2r+1)^2 square window is
    the product of the two passes.
    """
    if radius < 0:
        raise ValueError(f"dilation radius must be >= 0, got {radius}")
    if radius == 0:
        return mask
    bits = _smear(mask.bits, radius, axis=0)
    bits = _smear(bits, radius, axis=1)
    return Mask(width=mask.width, height=mask.height, bits=bits)


def _smear(bits: np.ndarray, radius: int, axis: int) -> np.ndarray:
    out = bits.copy()
    for d in range(1, radius + 1):
        lead = [slice(None), slice(None)]
        trail = [slice(None), slice(None)]
        lead[axis] = slice(d, None)
        trail[axis] = slice(None, -d)
        out[tuple(lead)] |= bits[tuple(trail)]
        out[tuple(trail)] |= bits[tuple(lead)]
    return out


def resize_frame(frame: Frame, out_w: int, out_h: int) -> Frame:
    """Bilinear resample with half-pixel center alignment.

    Sampling (no prefilter) at ``(i + 0.5) * scale - 0.5`` means an exact
    2:1 reduction averages each 2x2 source block, and resizing to the same
    dimensions is the identity.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output dimensions must be >= 1, got {out_w}x{out_h}")
    if (out_w, out_h) == (frame.width, frame.height):
        return frame
    src = frame.pixels.astype(np.float64)
    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * (frame.width / out_w) - 0.5
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * (frame.height / out_h) - 0.5
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0i = np.clip(x0.astype(np.int64), 0, frame.width - 1)
    x1i = np.clip(x0i + 1, 0, frame.width - 1)
    y0i = np.clip(y0.astype(np.int64), 0, frame.height - 1)
    y1i = np.clip(y0i + 1, 0, frame.height - 1)
    fx = fx[None, :, None]
    fy = fy[:, None, None]
    top = src[y0i][:, x0i] * (1.0 - fx) + src[y0i][:, x1i] * fx
    bottom = src[y1i][:, x0i] * (1.0 - fx) + src[y1i][:, x1i] * fx
    value = top * (1.0 - fy) + bottom * fy
    out = np.clip(np.rint(value), 0, 255).astype(np.uint8)
    return Frame(width=out_w, height=out_h, pixels=out)


def downsample_mask(mask: Mask, out_w: int, out_h: int) -> Mask:
    """Coverage-max reduction: output pixel True iff any source pixel in its
    footprint is True, so thin regions survive the shrink to backend size.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output dimensions must be >= 1, got {out_w}x{out_h}")
    if out_w > mask.width or out_h > mask.height:
        raise UnsupportedResizeError(
            f"cannot upsample mask {mask.width}x{mask.height} to {out_w}x{out_h}"
        )
    if (out_w, out_h) == (mask.width, mask.height):
        return mask
    # Source pixel x maps to output cell floor(x * out_w / width); the first
    # source index of cell k is ceil(k * width / out_w). Integer arithmetic
    # keeps the partition exact.
    col_starts = np.array(
        [(k * mask.width + out_w - 1) // out_w for k in range(out_w)], dtype=np.int64
    )
    row_starts = np.array(
        [(k * mask.height + out_h - 1) // out_h for k in range(out_h)], dtype=np.int64
    )
    counts = np.add.reduceat(mask.bits.astype(np.int64), row_starts, axis=0)
    counts = np.add.reduceat(counts, col_starts, axis=1)
    return Mask(width=out_w, height=out_h, bits=counts > 0)


def coverage(mask: Mask) -> float:
    """Fraction of True bits, in [0, 1]."""
    return mask.count() / (mask.width * mask.height)


def load_frame(path: str | Path) -> Frame:
    """Decode an RGB PNG or JPEG file into a Frame."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return Frame.from_array(arr)


def encode_frame_png(frame: Frame) -> bytes:
    """Frame as in-memory RGB PNG bytes (wire transport)."""
    buf = io.BytesIO()
    Image.fromarray(frame.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_frame_png(data: bytes) -> Frame:
    """Inverse of encode_frame_png; accepts any RGB-convertible raster."""
    with Image.open(io.BytesIO(data)) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return Frame.from_array(arr)


def encode_mask_png(mask: Mask) -> bytes:
    """Mask as in-memory single-channel PNG bytes, 0/255 convention."""
    buf = io.BytesIO()
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_mask_png(data: bytes) -> Mask:
    with Image.open(io.BytesIO(data)) as img:
        arr = np.asarray(img.convert("L"), dtype=np.uint8)
    return Mask.from_array(arr != 0)


def save_frame(frame: Frame, path: str | Path) -> None:
    """Write a Frame as 8-bit RGB PNG (no alpha)."""
    Image.fromarray(frame.pixels, mode="RGB").save(path, format="PNG")


def load_mask(path: str | Path) -> Mask:
    """Read a single-channel mask PNG; any nonzero value means regenerate."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"), dtype=np.uint8)
    return Mask.from_array(arr != 0)


def save_mask(mask: Mask, path: str | Path) -> None:
    """Write a Mask as single-channel PNG, 0 = preserve, 255 = regenerate."""
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def nearest_upscale(frame: Frame, factor: int) -> Frame:
    """Integer-factor nearest-neighbor upscale (contact-sheet legibility)."""
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return frame
    arr = np.repeat(np.repeat(frame.pixels, factor, axis=0), factor, axis=1)
    return Frame.from_array(arr)


def nearest_upscale_mask(mask: Mask, factor: int) -> Mask:
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return mask
    bits = np.repeat(np.repeat(mask.bits, factor, axis=0), factor, axis=1)
    return Mask.from_array(bits)
