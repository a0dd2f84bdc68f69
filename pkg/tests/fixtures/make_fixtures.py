"""Regenerate the committed fixture mini-dataset.

Three action instances across three videos, with synthetic 128x96 frames,
authored detections and segmentations, and a small exemplar pairs file.
Everything here is deterministic (no randomness), so rerunning the script
reproduces the committed files byte for byte:

    python3 tests/fixtures/make_fixtures.py

The detection files deliberately include a score of exactly 0.1 (excluded
by the strictly-greater threshold rule) and one of 0.05 (excluded by any
sane threshold), so threshold behavior is observable end to end.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

ROOT = Path(__file__).resolve().parent

WIDTH, HEIGHT = 128, 96

ACTIONS = [
    # narration_id, participant_id, video_id, start, stop, verb, noun, narration
    ("P01_01_0", "P01", "P01_01", 30, 90, "add", "chicken", "add the chicken to the pot"),
    ("P01_02_0", "P01", "P01_02", 40, 120, "cut", "apple", "cut the apple in half"),
    ("P02_03_0", "P02", "P02_03", 15, 75, "remove", "lid", "remove the lid from the pot"),
]

DETECTIONS = {
    "P01_01": {
        30: [
            {"kind": "hand", "box": [10, 50, 40, 90], "score": 0.92},
            {"kind": "object", "box": [50, 40, 110, 90], "score": 0.85},
            {"kind": "object", "box": [0, 0, 10, 10], "score": 0.05},
            {"kind": "hand", "box": [80, 10, 100, 30], "score": 0.1},
        ]
    },
    "P01_02": {
        40: [
            {"kind": "hand", "box": [60, 55, 95, 92], "score": 0.9},
            {"kind": "object", "box": [30, 45, 60, 75], "score": 0.8},
            {"kind": "object", "box": [55, 30, 70, 60], "score": 0.45},
        ]
    },
    "P02_03": {
        15: [
            {"kind": "hand", "box": [15, 35, 45, 70], "score": 0.88},
            {"kind": "object", "box": [48, 28, 92, 60], "score": 0.7},
        ]
    },
}

SEGMENTATIONS = {
    "P01_01": {
        30: [
            {
                "category": "pot",
                "polygons": [[[48, 38], [112, 38], [112, 92], [48, 92]]],
                "score": 0.9,
            },
            {
                "category": "chicken",
                "polygons": [[[60, 50], [90, 50], [75, 80]]],
                "score": 0.75,
            },
            {
                "category": "potato",
                "polygons": [[[20, 70], [35, 70], [35, 85], [20, 85]]],
                "score": 0.5,
            },
            {
                "category": "spoon",
                "polygons": [[[3, 3], [8, 3], [8, 8]]],
                "score": 0.08,
            },
        ]
    },
    "P01_02": {
        40: [
            {
                "category": "apple",
                "polygons": [
                    [[38, 48], [52, 42], [62, 52], [60, 70], [44, 74], [34, 62]]
                ],
                "score": 0.85,
            },
            {
                "category": "knife",
                "polygons": [[[56, 28], [68, 30], [66, 62], [58, 60]]],
                "score": 0.6,
            },
            {
                "category": "hand",
                "polygons": [[[62, 58], [92, 58], [92, 90], [62, 90]]],
                "score": 0.7,
            },
        ]
    },
    "P02_03": {
        15: [
            {
                "category": "pot",
                "polygons": [[[40, 30], [100, 30], [100, 85], [40, 85]]],
                "score": 0.8,
            },
            {
                "category": "lid",
                "polygons": [[[45, 22], [95, 22], [95, 44], [45, 44]]],
                "score": 0.82,
            },
        ]
    },
}

PAIRS = """\
# exemplar action/effect pairs for few-shot prompting
boil water\tThe water in the kettle is boiling.
stir soup\tThe soup is swirled and evenly mixed.
chop onion\tThe onion lies in small pieces on the board.
open jar\tThe jar stands open with the lid beside it.
pour milk\tThe glass is filled with milk.
wash plate\tThe plate is clean and rinsed.
"""


def synth_frame(video_index: int, phase: int) -> np.ndarray:
    """A recognizably different image per (video, start/stop phase):
    colored gradient background with a moving block and disc."""
    yy, xx = np.mgrid[0:HEIGHT, 0:WIDTH]
    arr = np.zeros((HEIGHT, WIDTH, 3), dtype=np.uint8)
    arr[..., 0] = (xx * 2 + 40 * video_index) % 256
    arr[..., 1] = (yy * 2 + 90 * phase) % 256
    arr[..., 2] = (xx + yy + 60 * video_index + 30 * phase) % 256

    bx = 18 + 12 * video_index + 24 * phase
    by = 30 + 6 * video_index
    arr[by : by + 28, bx : bx + 34] = (230 - 40 * phase, 60 + 50 * video_index, 40)

    cx, cy, radius = 90 - 18 * phase, 60, 14
    disc = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius**2
    arr[disc] = (40, 200 - 50 * phase, 220 - 40 * video_index)
    return arr


def write_frames() -> None:
    for video_index, (_nid, _pid, video_id, start, stop, _v, _n, _t) in enumerate(ACTIONS):
        video_dir = ROOT / "frames" / video_id
        video_dir.mkdir(parents=True, exist_ok=True)
        for phase, index in enumerate((start, stop)):
            img = Image.fromarray(synth_frame(video_index, phase), mode="RGB")
            img.save(video_dir / f"frame_{index:010d}.png", format="PNG")


def write_actions() -> None:
    lines = ["narration_id,participant_id,video_id,start_frame,stop_frame,verb,noun,narration"]
    for nid, pid, vid, start, stop, verb, noun, text in ACTIONS:
        lines.append(f"{nid},{pid},{vid},{start},{stop},{verb},{noun},{text}")
    (ROOT / "actions.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_annotations(name: str, per_video: dict) -> None:
    out_dir = ROOT / name
    out_dir.mkdir(parents=True, exist_ok=True)
    for video_id, frames in per_video.items():
        payload = {str(k): v for k, v in sorted(frames.items())}
        with (out_dir / f"{video_id}.json").open("w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def main() -> None:
    write_frames()
    write_actions()
    write_annotations("detections", DETECTIONS)
    write_annotations("segmentations", SEGMENTATIONS)
    (ROOT / "pairs.tsv").write_text(PAIRS, encoding="utf-8")
    print(f"fixtures written under {ROOT}")


if __name__ == "__main__":
    main()
