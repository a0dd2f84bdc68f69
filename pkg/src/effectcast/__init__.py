"""effectcast: predict the visual effect of a kitchen action.

The pipeline takes a start-state frame, an action phrase, and
annotation-derived regions of interest; builds an inpainting mask under one
of three strategies; produces a text prompt (the raw phrase or a few-shot
effect description); and asks a text-conditioned inpainting backend for the
predicted end state. The experiment runner sweeps the strategy x prompt
matrix, caches backend calls, and renders strategy-comparison contact
sheets with a reproducible manifest.
"""

from ._version import __version__
from .backends import (
    BACKEND_SIZE,
    BackendDescriptor,
    InpaintBackend,
    InpaintRequest,
    InpaintResult,
    MockInpaintBackend,
    RemoteInpaintBackend,
    mock_generate,
)
from .dataset import (
    ActionInstance,
    Detection,
    DetectionKind,
    FramePair,
    SegmentationRegion,
    load_actions,
    load_detections,
    load_segmentations,
    select_frame_pair,
)
from .errors import EffectcastError
from .imaging import (
    Box,
    Frame,
    Mask,
    Polygon,
    coverage,
    dilate,
    downsample_mask,
    load_frame,
    load_mask,
    rasterize_box,
    rasterize_polygon,
    resize_frame,
    save_frame,
    save_mask,
    union,
)
from .masks import (
    FallbackPolicy,
    MaskKind,
    MaskStrategyConfig,
    build_mask,
    fixed_mask,
    hand_object_mask,
    segmentation_mask,
)
from .prompts import (
    ActionEffectPair,
    CompletionClient,
    PromptMode,
    PromptSpec,
    RemoteCompletionClient,
    ScriptedCompletionClient,
    build_fewshot_prompt,
    effect_prompt,
    load_pairs,
    parse_effect,
    passthrough_prompt,
)
from .runner import (
    BackendConfig,
    CellRecord,
    CompletionConfig,
    InstanceFilter,
    RunConfig,
    RunManifest,
    cache_key,
    load_run_config,
    run,
    strip_volatile,
)
from .sheet import contact_sheet, sheet_dimensions

__all__ = [
    "__version__",
    "BACKEND_SIZE",
    "ActionEffectPair",
    "ActionInstance",
    "BackendConfig",
    "BackendDescriptor",
    "Box",
    "CellRecord",
    "CompletionClient",
    "CompletionConfig",
    "Detection",
    "DetectionKind",
    "EffectcastError",
    "FallbackPolicy",
    "Frame",
    "FramePair",
    "InpaintBackend",
    "InpaintRequest",
    "InpaintResult",
    "InstanceFilter",
    "Mask",
    "MaskKind",
    "MaskStrategyConfig",
    "MockInpaintBackend",
    "Polygon",
    "PromptMode",
    "PromptSpec",
    "RemoteCompletionClient",
    "RemoteInpaintBackend",
    "RunConfig",
    "RunManifest",
    "ScriptedCompletionClient",
    "SegmentationRegion",
    "build_fewshot_prompt",
    "build_mask",
    "cache_key",
    "contact_sheet",
    "coverage",
    "dilate",
    "downsample_mask",
    "effect_prompt",
    "fixed_mask",
    "hand_object_mask",
    "load_actions",
    "load_detections",
    "load_frame",
    "load_mask",
    "load_pairs",
    "load_run_config",
    "load_segmentations",
    "mock_generate",
    "parse_effect",
    "passthrough_prompt",
    "rasterize_box",
    "rasterize_polygon",
    "resize_frame",
    "run",
    "save_frame",
    "save_mask",
    "segmentation_mask",
    "select_frame_pair",
    "sheet_dimensions",
    "strip_volatile",
    "union",
]
