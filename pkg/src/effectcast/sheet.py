"""Strategy-comparison contact sheets.

One sheet summarizes one action instance as a grid of 128x128 cells with
4-pixel gutters and a 16-pixel label strip beneath each row:

- row 1: start frame and ground-truth end frame;
- row 2: each strategy's mask, rendered as a red overlay on the start frame;
- one further row per prompt mode: that mode's output per strategy column.

The column count is max(2, number of strategies) so the start/end pair
always fits; missing or failed cells render as labeled gray placeholders.
Cell pixels come from exact integer arithmetic (nearest-neighbor upscales,
50% integer blends), so sheet geometry and cell content are fully
deterministic for a given input.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .dataset import FramePair
from .imaging import Frame, Mask, nearest_upscale, resize_frame

__all__ = [
    "CELL_SIZE",
    "GUTTER",
    "LABEL_HEIGHT",
    "sheet_dimensions",
    "contact_sheet",
]

CELL_SIZE = 128
GUTTER = 4
LABEL_HEIGHT = 16

_BACKGROUND = (24, 24, 24)
_PLACEHOLDER = (96, 96, 96)
_LABEL_COLOR = (230, 230, 230)
_OVERLAY_RED = np.array([255, 0, 0], dtype=np.uint16)


def sheet_dimensions(n_strategies: int, n_modes: int) -> tuple[int, int]:
    """Closed-form sheet size in pixels: (width, height).

    rows = 1 (start/end) + 1 (masks) + n_modes; columns = max(2, n_strategies).
    Width = columns * cell + (columns + 1) * gutter; each row additionally
    carries its label strip.
    """
    rows = 2 + n_modes
    cols = max(2, n_strategies)
    width = cols * CELL_SIZE + (cols + 1) * GUTTER
    height = rows * (CELL_SIZE + LABEL_HEIGHT) + (rows + 1) * GUTTER
    return width, height


def _to_cell(frame: Frame) -> np.ndarray:
    """Any frame to a 128x128 pixel block: x2 nearest for backend-size
    frames, bilinear otherwise."""
    if (frame.width, frame.height) == (CELL_SIZE // 2, CELL_SIZE // 2):
        return nearest_upscale(frame, 2).pixels
    if (frame.width, frame.height) == (CELL_SIZE, CELL_SIZE):
        return frame.pixels
    return resize_frame(frame, CELL_SIZE, CELL_SIZE).pixels


def _mask_overlay_cell(start: Frame, mask: Mask) -> np.ndarray:
    """Start frame at cell size with the mask blended in red at 50%."""
    base = _to_cell(start).copy()
    factor = CELL_SIZE // mask.width if CELL_SIZE % mask.width == 0 else None
    if factor:
        bits = np.repeat(np.repeat(mask.bits, factor, axis=0), factor, axis=1)
    else:
        ys = (np.arange(CELL_SIZE) * mask.height) // CELL_SIZE
        xs = (np.arange(CELL_SIZE) * mask.width) // CELL_SIZE
        bits = mask.bits[ys][:, xs]
    blended = (base[bits].astype(np.uint16) + _OVERLAY_RED) // 2
    base[bits] = blended.astype(np.uint8)
    return base


def _placeholder_cell(text: str) -> np.ndarray:
    img = Image.new("RGB", (CELL_SIZE, CELL_SIZE), _PLACEHOLDER)
    draw = ImageDraw.Draw(img)
    draw.text((6, CELL_SIZE // 2 - 6), text[:18], fill=(240, 240, 240))
    return np.asarray(img, dtype=np.uint8)


def contact_sheet(
    pair: FramePair,
    strategies: Sequence[str],
    modes: Sequence[str],
    masks: Mapping[str, Mask | None],
    outputs: Mapping[tuple[str, str], Frame | None],
    errors: Mapping[tuple[str, str], str] | None = None,
) -> Frame:
    """Compose the grid for one instance.

    ``masks`` maps strategy name to its backend-size mask (None renders a
    placeholder); ``outputs`` maps (strategy, mode) to the predicted frame;
    ``errors`` optionally supplies placeholder text for failed cells.
    """
    if not strategies or not modes:
        raise ValueError("contact_sheet needs at least one strategy and one mode")
    errors = errors or {}
    width, height = sheet_dimensions(len(strategies), len(modes))
    canvas = Image.new("RGB", (width, height), _BACKGROUND)
    draw = ImageDraw.Draw(canvas)

    def cell_origin(row: int, col: int) -> tuple[int, int]:
        x = GUTTER + col * (CELL_SIZE + GUTTER)
        y = GUTTER + row * (CELL_SIZE + LABEL_HEIGHT + GUTTER)
        return x, y

    def paste(row: int, col: int, block: np.ndarray) -> None:
        x, y = cell_origin(row, col)
        canvas.paste(Image.fromarray(block, mode="RGB"), (x, y))

    def label(row: int, text: str) -> None:
        x, y = cell_origin(row, 0)
        draw.text((x + 2, y + CELL_SIZE + 2), text, fill=_LABEL_COLOR)

    paste(0, 0, _to_cell(pair.start))
    paste(0, 1, _to_cell(pair.end_truth))
    label(0, "start | end truth")

    for col, strategy in enumerate(strategies):
        mask = masks.get(strategy)
        if mask is None:
            paste(1, col, _placeholder_cell(errors.get((strategy, "mask"), "no mask")))
        else:
            paste(1, col, _mask_overlay_cell(pair.start, mask))
    label(1, "masks: " + " | ".join(strategies))

    for r, mode in enumerate(modes):
        row = 2 + r
        for col, strategy in enumerate(strategies):
            frame = outputs.get((strategy, mode))
            if frame is None:
                paste(row, col, _placeholder_cell(errors.get((strategy, mode), "error")))
            else:
                paste(row, col, _to_cell(frame))
        label(row, mode)

    return Frame.from_array(np.asarray(canvas, dtype=np.uint8))
