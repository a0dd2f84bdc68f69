"""One-shot conversion of upstream detector/segmenter output into the
intermediate per-video JSON the loaders consume.

The supported source layout is the COCO-style instance format: a JSON
object with ``images`` (id, file_name), ``annotations`` (image_id,
category_id, bbox, optional score, optional segmentation), and
``categories`` (id, name). Frame indices are recovered from the digits in
each image file name; categories whose name contains "hand" become hand
detections, everything else an object detection. Boxes arrive as
[x, y, width, height] floats and are widened to covering integer pixel
boxes (floor the minimum, ceil the maximum).

This keeps model-specific file layouts out of the core pipeline: convert
once, then point the runner at the converted directory.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

from .errors import RecordError

__all__ = ["convert_coco_detections", "convert_coco_segmentations"]

_DIGITS = re.compile(r"(\d+)")


def _load_source(path: Path) -> tuple[dict, dict, dict]:
    with path.open(encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecordError(f"{path}: not valid JSON: {exc}") from exc
    for key in ("images", "annotations", "categories"):
        if key not in doc:
            raise RecordError(f"{path}: missing top-level {key!r}")
    frames = {}
    for image in doc["images"]:
        match = _DIGITS.findall(str(image.get("file_name", "")))
        if not match:
            raise RecordError(
                f"{path}: image {image.get('id')} file_name has no frame digits"
            )
        frames[image["id"]] = int(match[-1])
    categories = {c["id"]: str(c["name"]) for c in doc["categories"]}
    return doc, frames, categories


def _write(out_path: Path, records: dict[int, list]) -> None:
    payload = {str(k): records[k] for k in sorted(records)}
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def convert_coco_detections(source: str | Path, out_path: str | Path) -> int:
    """Write the detections intermediate for one video; returns the record count."""
    source = Path(source)
    _doc, frames, categories = _load_source(source)
    records: dict[int, list] = {}
    count = 0
    for ann in _doc["annotations"]:
        frame = frames.get(ann.get("image_id"))
        if frame is None:
            raise RecordError(f"{source}: annotation references unknown image {ann.get('image_id')}")
        category = categories.get(ann.get("category_id"), "")
        try:
            x, y, w, h = ann["bbox"]
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordError(f"{source}: annotation missing bbox: {exc}") from exc
        record = {
            "kind": "hand" if "hand" in category.lower() else "object",
            "box": [
                math.floor(float(x)),
                math.floor(float(y)),
                math.ceil(float(x) + float(w)),
                math.ceil(float(y) + float(h)),
            ],
            "score": float(ann.get("score", 1.0)),
        }
        records.setdefault(frame, []).append(record)
        count += 1
    _write(Path(out_path), records)
    return count


def convert_coco_segmentations(source: str | Path, out_path: str | Path) -> int:
    """Write the segmentations intermediate for one video; returns the record count."""
    source = Path(source)
    _doc, frames, categories = _load_source(source)
    records: dict[int, list] = {}
    count = 0
    for ann in _doc["annotations"]:
        segmentation = ann.get("segmentation")
        if not segmentation:
            continue
        frame = frames.get(ann.get("image_id"))
        if frame is None:
            raise RecordError(f"{source}: annotation references unknown image {ann.get('image_id')}")
        polygons = []
        for part in segmentation:
            if not isinstance(part, list) or len(part) < 6 or len(part) % 2:
                raise RecordError(
                    f"{source}: segmentation part must be a flat x,y list of >= 3 points"
                )
            polygons.append([[float(part[i]), float(part[i + 1])] for i in range(0, len(part), 2)])
        records.setdefault(frame, []).append(
            {
                "category": categories.get(ann.get("category_id"), "unknown"),
                "polygons": polygons,
                "score": float(ann.get("score", 1.0)),
            }
        )
        count += 1
    _write(Path(out_path), records)
    return count
