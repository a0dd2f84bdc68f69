"""Loaders for action annotations, frames, detections, and segmentation regions.

Annotations arrive as a comma-separated table (one row per action segment).
Detections and segmentations are read from a neutral intermediate format,
one JSON document per video, keyed by frame index as a string:

    {"30": [{"kind": "hand", "box": [x_min, y_min, x_max, y_max], "score": 0.9},
            ...],
     ...}

    {"30": [{"category": "pot", "polygons": [[[x, y], ...], ...], "score": 0.9},
            ...],
     ...}

Coordinates are source-resolution pixels. Loaders never filter by score;
thresholding is a mask-strategy concern.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import MissingFrameError, RecordError, SchemaError
from .imaging import Box, Frame, Polygon, load_frame

__all__ = [
    "ActionInstance",
    "DetectionKind",
    "Detection",
    "SegmentationRegion",
    "FramePair",
    "REQUIRED_ACTION_COLUMNS",
    "load_actions",
    "load_detections",
    "load_segmentations",
    "select_frame_pair",
    "frame_path",
]

REQUIRED_ACTION_COLUMNS = (
    "narration_id",
    "participant_id",
    "video_id",
    "start_frame",
    "stop_frame",
    "verb",
    "noun",
)

FRAME_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class ActionInstance:
    """One annotated action segment of a video."""

    narration_id: str
    video_id: str
    participant_id: str
    verb: str
    noun: str
    phrase: str
    start_frame: int
    stop_frame: int

    def __post_init__(self):
        if not self.phrase.strip():
            raise ValueError(f"action {self.narration_id!r} has an empty phrase")
        if self.start_frame < 0:
            raise ValueError(
                f"action {self.narration_id!r}: start_frame must be >= 0, "
                f"got {self.start_frame}"
            )
        if self.start_frame >= self.stop_frame:
            raise ValueError(
                f"action {self.narration_id!r}: start_frame {self.start_frame} "
                f"must precede stop_frame {self.stop_frame}"
            )


class DetectionKind(str, Enum):
    HAND = "hand"
    OBJECT = "object"


@dataclass(frozen=True)
class Detection:
    """Scored box proposal for one frame."""

    frame_index: int
    kind: DetectionKind
    box: Box
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class SegmentationRegion:
    """Scored multi-part polygon region for one frame."""

    frame_index: int
    category: str
    polygons: tuple[Polygon, ...]
    score: float

    def __post_init__(self):
        if not self.polygons:
            raise ValueError(f"region {self.category!r} has no polygons")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"region score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class FramePair:
    """Start frame and ground-truth end frame for side-by-side display."""

    start: Frame
    end_truth: Frame

    def __post_init__(self):
        if (self.start.width, self.start.height) != (self.end_truth.width, self.end_truth.height):
            raise ValueError(
                f"frame pair dimensions differ: start "
                f"{self.start.width}x{self.start.height}, end "
                f"{self.end_truth.width}x{self.end_truth.height}"
            )


def load_actions(path: str | Path) -> list[ActionInstance]:
    """Parse the annotation table into ActionInstances, preserving row order.

    The header must name every column in REQUIRED_ACTION_COLUMNS (extras are
    ignored). Raises SchemaError for a missing column, RecordError for a row
    whose frame indices fail to parse or violate instance invariants.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in REQUIRED_ACTION_COLUMNS:
            if column not in header:
                raise SchemaError(f"{path}: missing required column {column!r}")
        instances: list[ActionInstance] = []
        for row in reader:
            line = reader.line_num
            try:
                start = int(row["start_frame"])
                stop = int(row["stop_frame"])
            except (TypeError, ValueError) as exc:
                raise RecordError(f"{path} row {line}: malformed frame index: {exc}") from exc
            try:
                instances.append(
                    ActionInstance(
                        narration_id=row["narration_id"],
                        video_id=row["video_id"],
                        participant_id=row["participant_id"],
                        verb=row["verb"],
                        noun=row["noun"],
                        phrase=f"{row['verb']} {row['noun']}",
                        start_frame=start,
                        stop_frame=stop,
                    )
                )
            except ValueError as exc:
                raise RecordError(f"{path} row {line}: {exc}") from exc
    return instances


def _load_frame_records(path: Path, frame_index: int) -> list[dict]:
    with path.open(encoding="utf-8") as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecordError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise RecordError(f"{path}: expected a frame-index map at top level")
    records = document.get(str(frame_index), [])
    if not isinstance(records, list):
        raise RecordError(f"{path} frame {frame_index}: expected a list of records")
    return records


def load_detections(path: str | Path, frame_index: int) -> list[Detection]:
    """All detections recorded for one frame, unfiltered.

    A frame absent from the file is an empty list, not an error. Raises
    RecordError for an unknown kind tag or an invariant-violating record;
    a missing file propagates as FileNotFoundError.
    """
    path = Path(path)
    detections: list[Detection] = []
    for i, record in enumerate(_load_frame_records(path, frame_index)):
        where = f"{path} frame {frame_index} record {i}"
        try:
            kind = DetectionKind(record["kind"])
        except (KeyError, TypeError) as exc:
            raise RecordError(f"{where}: missing detection field: {exc}") from exc
        except ValueError as exc:
            raise RecordError(f"{where}: unknown detection kind {record.get('kind')!r}") from exc
        try:
            x_min, y_min, x_max, y_max = record["box"]
            detections.append(
                Detection(
                    frame_index=frame_index,
                    kind=kind,
                    box=Box(int(x_min), int(y_min), int(x_max), int(y_max)),
                    score=float(record["score"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise RecordError(f"{where}: malformed detection record: {exc}") from exc
        except ValueError as exc:
            raise RecordError(f"{where}: {exc}") from exc
    return detections


def load_segmentations(path: str | Path, frame_index: int) -> list[SegmentationRegion]:
    """All segmentation regions recorded for one frame, unfiltered.

    Mirrors load_detections: absent frame means empty list; malformed or
    invariant-violating records raise RecordError.
    """
    path = Path(path)
    regions: list[SegmentationRegion] = []
    for i, record in enumerate(_load_frame_records(path, frame_index)):
        where = f"{path} frame {frame_index} record {i}"
        try:
            polygons = tuple(
                Polygon(tuple((float(x), float(y)) for x, y in part))
                for part in record["polygons"]
            )
            regions.append(
                SegmentationRegion(
                    frame_index=frame_index,
                    category=str(record["category"]),
                    polygons=polygons,
                    score=float(record["score"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise RecordError(f"{where}: malformed segmentation record: {exc}") from exc
        except ValueError as exc:
            raise RecordError(f"{where}: {exc}") from exc
    return regions


def frame_path(frames_dir: str | Path, video_id: str, index: int, padding: int = 10) -> Path:
    """Resolve a frame image under frames_dir/video_id/ by zero-padded index.

    Tries each known extension in order and returns the first that exists.
    Raises MissingFrameError naming the expected path when none do.
    """
    stem = Path(frames_dir) / video_id / f"frame_{index:0{padding}d}"
    for ext in FRAME_EXTENSIONS:
        candidate = stem.with_suffix(ext)
        if candidate.is_file():
            return candidate
    raise MissingFrameError(stem.with_suffix(FRAME_EXTENSIONS[0]))


def select_frame_pair(
    instance: ActionInstance, frames_dir: str | Path, padding: int = 10
) -> FramePair:
    """Decode the segment's boundary frames: start state and ground-truth end."""
    start = load_frame(frame_path(frames_dir, instance.video_id, instance.start_frame, padding))
    end = load_frame(frame_path(frames_dir, instance.video_id, instance.stop_frame, padding))
    return FramePair(start=start, end_truth=end)
