"""Post-run reporting: a delimited cell table plus summary figures.

Reads a run manifest and writes, next to each other in the chosen output
directory:

- ``cells.csv`` — one row per matrix cell with prompt, artifact paths,
  mask coverage, timing, and any error;
- ``mask_coverage.png`` — grouped bars of mask coverage per instance and
  strategy;
- ``cell_times.png`` — per-cell backend time (zero for cache hits).

Coverage is recomputed from the mask artifacts referenced by the manifest,
so the report reflects what is actually on disk.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .imaging import coverage, load_mask
from .runner import RunManifest

__all__ = ["write_report"]

_STRATEGY_COLORS = {
    "fixed": "#4878cf",
    "hand_object": "#e1812c",
    "segmentation": "#3a923a",
}


def _mask_coverage(manifest_dir: Path, mask_file: str | None) -> float | None:
    if not mask_file:
        return None
    path = manifest_dir / mask_file
    if not path.is_file():
        return None
    return coverage(load_mask(path))


def write_report(manifest_path: str | Path, out_dir: str | Path) -> list[Path]:
    """Render the report artifacts; returns the paths written."""
    manifest_path = Path(manifest_path)
    manifest = RunManifest.load(manifest_path)
    manifest_dir = manifest_path.parent
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    coverages: dict[tuple[str, str], float] = {}
    rows = []
    for cell in manifest.cells:
        cov = _mask_coverage(manifest_dir, cell.mask_file)
        if cov is not None:
            coverages[(cell.narration_id, cell.strategy)] = cov
        rows.append(
            {
                "narration_id": cell.narration_id,
                "strategy": cell.strategy,
                "prompt_mode": cell.prompt_mode,
                "prompt": cell.prompt or "",
                "mask_file": cell.mask_file or "",
                "mask_coverage": f"{cov:.6f}" if cov is not None else "",
                "output_file": cell.output_file or "",
                "cache_key": cell.cache_key or "",
                "backend_id": cell.backend_id or "",
                "elapsed_ms": f"{cell.elapsed_ms:.3f}" if cell.elapsed_ms is not None else "",
                "error": cell.error or "",
            }
        )

    csv_path = out_dir / "cells.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()) if rows else [])
        writer.writeheader()
        writer.writerows(rows)
    written.append(csv_path)

    written.append(_coverage_figure(out_dir, manifest, coverages))
    written.append(_timing_figure(out_dir, manifest))
    return written


def _coverage_figure(out_dir: Path, manifest: RunManifest, coverages: dict) -> Path:
    instances = sorted({c.narration_id for c in manifest.cells})
    strategies = sorted({c.strategy for c in manifest.cells})
    fig, ax = plt.subplots(figsize=(max(6.0, 1.8 * len(instances)), 4.0))
    x = np.arange(len(instances))
    width = 0.8 / max(1, len(strategies))
    for i, strategy in enumerate(strategies):
        values = [coverages.get((nid, strategy), 0.0) for nid in instances]
        ax.bar(
            x + (i - (len(strategies) - 1) / 2) * width,
            values,
            width,
            label=strategy,
            color=_STRATEGY_COLORS.get(strategy),
        )
    ax.set_xticks(x)
    ax.set_xticklabels(instances, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("mask coverage")
    ax.set_title("Mask coverage by instance and strategy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "mask_coverage.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def _timing_figure(out_dir: Path, manifest: RunManifest) -> Path:
    cells = list(manifest.cells)
    labels = [f"{c.narration_id}\n{c.strategy}/{c.prompt_mode}" for c in cells]
    values = [c.elapsed_ms if c.elapsed_ms is not None else 0.0 for c in cells]
    colors = ["#b04a4a" if c.error else "#5a7db0" for c in cells]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * len(cells)), 4.0))
    ax.bar(np.arange(len(cells)), values, color=colors)
    ax.set_xticks(np.arange(len(cells)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_ylabel("backend time (ms)")
    ax.set_title("Per-cell backend time (error cells in red)")
    fig.tight_layout()
    path = out_dir / "cell_times.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
