"""The three mask strategies behind one interface.

A strategy maps a frame's dimensions plus its annotations to the Mask the
inpainting backend will regenerate:

- ``fixed``: a constant band covering the lower portion of the frame
  (default two thirds), no annotations needed.
- ``hand_object``: union of hand and object detection boxes scoring
  strictly above the threshold.
- ``segmentation``: union of all segmentation region polygons scoring
  strictly above the threshold. Every category is included by default;
  scene objects beyond the manipulated one belong in the mask.

Threshold comparisons are strictly greater-than throughout, so a score
exactly equal to the threshold is excluded. Masks are built at source
resolution and reduced to backend size elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .dataset import Detection, SegmentationRegion
from .errors import EmptyMaskError
from .imaging import Mask, dilate, rasterize_box, rasterize_polygon, union

__all__ = [
    "MaskKind",
    "FallbackPolicy",
    "MaskStrategyConfig",
    "fixed_mask",
    "hand_object_mask",
    "segmentation_mask",
    "build_mask",
]

DEFAULT_FIXED_FRACTION = 2.0 / 3.0
DEFAULT_SCORE_THRESHOLD = 0.1


class MaskKind(str, Enum):
    FIXED = "fixed"
    HAND_OBJECT = "hand_object"
    SEGMENTATION = "segmentation"


class FallbackPolicy(str, Enum):
    ERROR = "error"
    USE_FIXED = "use_fixed"


@dataclass(frozen=True)
class MaskStrategyConfig:
    """Everything a mask strategy needs beyond the frame and annotations."""

    kind: MaskKind
    fixed_fraction: float = DEFAULT_FIXED_FRACTION
    score_threshold: float = DEFAULT_SCORE_THRESHOLD
    dilation_radius: int = 0
    fallback: FallbackPolicy = FallbackPolicy.ERROR
    noun_filter: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MaskKind(self.kind))
        object.__setattr__(self, "fallback", FallbackPolicy(self.fallback))
        if not 0.0 < self.fixed_fraction <= 1.0:
            raise ValueError(f"fixed_fraction must be in (0, 1], got {self.fixed_fraction}")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError(f"score_threshold must be in [0, 1], got {self.score_threshold}")
        if self.dilation_radius < 0:
            raise ValueError(f"dilation_radius must be >= 0, got {self.dilation_radius}")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "MaskStrategyConfig":
        """Build from a JSON-style mapping; unknown keys are rejected."""
        known = {"kind", "fixed_fraction", "score_threshold", "dilation_radius", "fallback", "noun_filter"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown mask strategy fields: {sorted(extra)}")
        if "kind" not in data:
            raise ValueError("mask strategy config requires a 'kind' field")
        return cls(**dict(data))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "fixed_fraction": self.fixed_fraction,
            "score_threshold": self.score_threshold,
            "dilation_radius": self.dilation_radius,
            "fallback": self.fallback.value,
            "noun_filter": self.noun_filter,
        }


def fixed_mask(width: int, height: int, fraction: float = DEFAULT_FIXED_FRACTION) -> Mask:
    """Band mask: rows y >= floor(height * (1 - fraction)) are true.

    fraction = 2/3 marks the lower two thirds; fraction = 1 the whole frame.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    cut = math.floor(height * (1.0 - fraction))
    bits = np.zeros((height, width), dtype=bool)
    bits[cut:, :] = True
    return Mask(width=width, height=height, bits=bits)


def _resolve_empty(
    width: int, height: int, fallback: FallbackPolicy, fixed_fraction: float, why: str
) -> Mask:
    if fallback is FallbackPolicy.USE_FIXED:
        return fixed_mask(width, height, fixed_fraction)
    raise EmptyMaskError(why)


def hand_object_mask(
    detections: Sequence[Detection],
    width: int,
    height: int,
    threshold: float = DEFAULT_SCORE_THRESHOLD,
    *,
    fallback: FallbackPolicy = FallbackPolicy.ERROR,
    fixed_fraction: float = DEFAULT_FIXED_FRACTION,
) -> Mask:
    """Union of every detection box (hands and objects alike) scoring
    strictly above the threshold.

    When nothing passes, the fallback policy decides: raise EmptyMaskError,
    or substitute the fixed band mask.
    """
    passing = [d for d in detections if d.score > threshold]
    if not passing:
        return _resolve_empty(
            width,
            height,
            fallback,
            fixed_fraction,
            f"no detection scored above {threshold} ({len(detections)} candidates)",
        )
    return union([rasterize_box(d.box, width, height) for d in passing])


def segmentation_mask(
    regions: Sequence[SegmentationRegion],
    width: int,
    height: int,
    threshold: float = DEFAULT_SCORE_THRESHOLD,
    *,
    fallback: FallbackPolicy = FallbackPolicy.ERROR,
    fixed_fraction: float = DEFAULT_FIXED_FRACTION,
    noun_filter: str | None = None,
) -> Mask:
    """Union of every region polygon scoring strictly above the threshold.

    No category filtering by default: the mask deliberately includes scene
    objects beyond the manipulated one. An optional noun_filter keeps only
    regions whose category matches it case-insensitively.
    """
    passing = [r for r in regions if r.score > threshold]
    if noun_filter is not None:
        wanted = noun_filter.strip().lower()
        passing = [r for r in passing if r.category.strip().lower() == wanted]
    parts = [
        rasterize_polygon(poly, width, height) for region in passing for poly in region.polygons
    ]
    if not parts:
        return _resolve_empty(
            width,
            height,
            fallback,
            fixed_fraction,
            f"no segmentation region scored above {threshold} ({len(regions)} candidates)",
        )
    combined = union(parts)
    if combined.count() == 0:
        return _resolve_empty(
            width,
            height,
            fallback,
            fixed_fraction,
            "passing segmentation regions rasterized to an empty mask",
        )
    return combined


def build_mask(
    config: MaskStrategyConfig,
    width: int,
    height: int,
    detections: Sequence[Detection] = (),
    regions: Sequence[SegmentationRegion] = (),
) -> Mask:
    """Dispatch to the configured strategy, then apply the dilation radius."""
    if config.kind is MaskKind.FIXED:
        raw = fixed_mask(width, height, config.fixed_fraction)
    elif config.kind is MaskKind.HAND_OBJECT:
        raw = hand_object_mask(
            detections,
            width,
            height,
            config.score_threshold,
            fallback=config.fallback,
            fixed_fraction=config.fixed_fraction,
        )
    else:
        raw = segmentation_mask(
            regions,
            width,
            height,
            config.score_threshold,
            fallback=config.fallback,
            fixed_fraction=config.fixed_fraction,
            noun_filter=config.noun_filter,
        )
    return dilate(raw, config.dilation_radius)
