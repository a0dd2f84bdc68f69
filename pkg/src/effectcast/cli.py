"""Command-line entry points.

Exit codes for ``run``: 0 on success, 1 for configuration or load
problems, 2 when the run completed but at least one matrix cell recorded
an error.
"""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

import click

from ._version import __version__
from .dataset import load_actions, load_detections, load_segmentations, select_frame_pair
from .errors import ConfigError, EffectcastError
from .imaging import coverage, load_frame, load_mask, save_frame, save_mask
from .masks import MaskKind, build_mask
from .prompts import (
    PromptMode,
    RemoteCompletionClient,
    ScriptedCompletionClient,
    STOP_SEQUENCE,
    build_fewshot_prompt,
    load_pairs,
    parse_effect,
)
from .runner import (
    RunManifest,
    load_run_config,
    parse_strategy_flag,
    run as run_experiment,
)
from .sheet import contact_sheet


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group()
@click.version_option(__version__, prog_name="effectcast")
def main():
    """Predict the end state of a kitchen action: build a mask, generate an
    effect prompt, inpaint, and compare strategies side by side."""


@main.command(name="run")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None, help="JSON run configuration; CLI flags override its fields.")
@click.option("--actions", type=click.Path(path_type=Path), default=None, help="Action annotation CSV.")
@click.option("--frames-dir", type=click.Path(path_type=Path), default=None, help="Root of per-video frame directories.")
@click.option("--detections-dir", type=click.Path(path_type=Path), default=None, help="Directory of per-video detection JSON files.")
@click.option("--segmentations-dir", type=click.Path(path_type=Path), default=None, help="Directory of per-video segmentation JSON files.")
@click.option("--pairs", type=click.Path(path_type=Path), default=None, help="Action/effect exemplar pairs (TSV).")
@click.option("--output-dir", type=click.Path(path_type=Path), default=None, help="Where artifacts and the manifest land.")
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "adapter"]), default=None, help="Inpainting backend.")
@click.option("--endpoint", default=None, help="Adapter backend endpoint URL.")
@click.option("--completion", "completion_kind", type=click.Choice(["scripted", "remote"]), default=None, help="Completion client for effect descriptions.")
@click.option("--completion-endpoint", default=None, help="Remote completion endpoint URL.")
@click.option("--credential-env", default=None, help="Environment variable holding the completion credential.")
@click.option("--seed", type=int, default=None, help="Global seed.")
@click.option("--parallelism", type=int, default=None, help="Worker threads for backend calls.")
@click.option("--frame-padding", type=int, default=None, help="Zero-padding width of frame file names.")
@click.option("--exemplar-count", type=int, default=None, help="Few-shot exemplars per prompt.")
@click.option("--strategy", "strategies", multiple=True, help="Mask strategy, repeatable; kind or kind:key=value,... .")
@click.option("--prompt-mode", "prompt_modes", multiple=True, type=click.Choice([m.value for m in PromptMode]), help="Prompt mode, repeatable.")
@click.option("--narration", "narrations", multiple=True, help="Restrict to these narration ids, repeatable.")
@click.option("--verb", default=None, help="Restrict to instances with this verb.")
@click.option("--noun", default=None, help="Restrict to instances with this noun.")
def run_cmd(
    config_path,
    actions,
    frames_dir,
    detections_dir,
    segmentations_dir,
    pairs,
    output_dir,
    backend_kind,
    endpoint,
    completion_kind,
    completion_endpoint,
    credential_env,
    seed,
    parallelism,
    frame_padding,
    exemplar_count,
    strategies,
    prompt_modes,
    narrations,
    verb,
    noun,
):
    """Run the strategy x prompt-mode matrix and write artifacts + manifest."""
    overrides: dict[str, object] = {
        "actions": actions,
        "frames_dir": frames_dir,
        "detections_dir": detections_dir,
        "segmentations_dir": segmentations_dir,
        "pairs": pairs,
        "output_dir": output_dir,
        "seed": seed,
        "parallelism": parallelism,
        "frame_padding": frame_padding,
        "exemplar_count": exemplar_count,
    }
    if strategies:
        overrides["strategies"] = list(strategies)
    if prompt_modes:
        overrides["prompt_modes"] = list(prompt_modes)
    if backend_kind or endpoint:
        overrides["backend"] = {"kind": backend_kind, "endpoint": endpoint}
    if completion_kind or completion_endpoint or credential_env:
        overrides["completion"] = {
            "kind": completion_kind,
            "endpoint": completion_endpoint,
            "credential_env": credential_env,
        }
    if narrations or verb or noun:
        overrides["filter"] = {
            "narration_ids": list(narrations) if narrations else None,
            "verb": verb,
            "noun": noun,
        }
    try:
        config = load_run_config(config_path, overrides)
        manifest = run_experiment(config)
    except ConfigError as exc:
        _fail(str(exc))
    errors = manifest.error_cells()
    click.echo(
        f"{len(manifest.cells)} cells ({len(errors)} errors), "
        f"{len(manifest.sheets)} sheets -> {Path(config.output_dir) / 'manifest.json'}"
    )
    for cell in errors:
        click.echo(
            f"  error: {cell.narration_id} {cell.strategy}/{cell.prompt_mode}: {cell.error}",
            err=True,
        )
    sys.exit(2 if errors else 0)


@main.command(name="mask")
@click.option("--strategy", required=True, help="Mask strategy: kind or kind:key=value,... .")
@click.option("--frame", "frame_path", required=True, type=click.Path(exists=True, path_type=Path), help="Start frame image.")
@click.option("--detections", "detections_path", type=click.Path(exists=True, path_type=Path), default=None, help="Per-video detections JSON.")
@click.option("--segmentations", "segmentations_path", type=click.Path(exists=True, path_type=Path), default=None, help="Per-video segmentations JSON.")
@click.option("--frame-index", type=int, default=None, help="Frame index to read annotations for.")
@click.option("--fixed-fraction", type=float, default=None)
@click.option("--score-threshold", type=float, default=None)
@click.option("--dilation-radius", type=int, default=None)
@click.option("--fallback", type=click.Choice(["error", "use_fixed"]), default=None)
@click.option("--noun-filter", default=None)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path), help="Mask PNG to write (0 = preserve, 255 = regenerate).")
def mask_cmd(
    strategy,
    frame_path,
    detections_path,
    segmentations_path,
    frame_index,
    fixed_fraction,
    score_threshold,
    dilation_radius,
    fallback,
    noun_filter,
    out_path,
):
    """Build one mask for one frame and write it as a PNG."""
    try:
        config = parse_strategy_flag(strategy)
        updates = {
            key: value
            for key, value in (
                ("fixed_fraction", fixed_fraction),
                ("score_threshold", score_threshold),
                ("dilation_radius", dilation_radius),
                ("fallback", fallback),
                ("noun_filter", noun_filter),
            )
            if value is not None
        }
        if updates:
            config = dataclasses.replace(config, **updates)
        frame = load_frame(frame_path)
        detections = ()
        regions = ()
        if config.kind is MaskKind.HAND_OBJECT:
            if detections_path is None or frame_index is None:
                _fail("hand_object strategy needs --detections and --frame-index")
            detections = load_detections(detections_path, frame_index)
        elif config.kind is MaskKind.SEGMENTATION:
            if segmentations_path is None or frame_index is None:
                _fail("segmentation strategy needs --segmentations and --frame-index")
            regions = load_segmentations(segmentations_path, frame_index)
        result = build_mask(config, frame.width, frame.height, detections, regions)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        save_mask(result, out_path)
    except (EffectcastError, OSError, ValueError) as exc:
        _fail(str(exc))
    click.echo(f"{out_path}  coverage={coverage(result):.4f}")


@main.command(name="prompt")
@click.option("--mode", required=True, type=click.Choice([m.value for m in PromptMode]))
@click.option("--action", "action_phrase", required=True, help="Query action phrase.")
@click.option("--pairs", "pairs_path", type=click.Path(exists=True, path_type=Path), default=None, help="Exemplar pairs TSV (effect mode).")
@click.option("--seed", type=int, default=0, help="Exemplar selection seed, used as-is.")
@click.option("--exemplar-count", "-k", type=int, default=2)
@click.option("--max-tokens", type=int, default=48)
@click.option("--temperature", type=float, default=0.0)
@click.option("--endpoint", default=None, help="Remote completion endpoint; default is the scripted client.")
@click.option("--credential-env", default=None)
@click.option("--show-fewshot", is_flag=True, help="Also print the few-shot prompt to stderr.")
def prompt_cmd(
    mode,
    action_phrase,
    pairs_path,
    seed,
    exemplar_count,
    max_tokens,
    temperature,
    endpoint,
    credential_env,
    show_fewshot,
):
    """Print the backend prompt for one action phrase.

    In effect mode the seed feeds exemplar selection directly; inside a run
    the seed is additionally varied per instance."""
    if PromptMode(mode) is PromptMode.ACTION_PHRASE:
        click.echo(action_phrase)
        return
    if pairs_path is None:
        _fail("effect_description mode needs --pairs")
    try:
        pairs = load_pairs(pairs_path)
        fewshot = build_fewshot_prompt(pairs, exemplar_count, action_phrase, seed)
        if show_fewshot:
            click.echo(fewshot, err=True)
        if endpoint:
            client = RemoteCompletionClient(endpoint, credential_env=credential_env)
        else:
            client = ScriptedCompletionClient()
        continuation = client.complete(
            fewshot, max_tokens=max_tokens, temperature=temperature, stop_sequences=(STOP_SEQUENCE,)
        )
        click.echo(parse_effect(continuation))
    except (EffectcastError, OSError) as exc:
        _fail(str(exc))


@main.command(name="sheet")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--narration", required=True, help="Narration id to render.")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def sheet_cmd(manifest_path, narration, out_path):
    """Rebuild one instance's contact sheet from a run manifest."""
    try:
        manifest = RunManifest.load(manifest_path)
        manifest_dir = manifest_path.parent
        cells = [c for c in manifest.cells if c.narration_id == narration]
        if not cells:
            _fail(f"manifest has no cells for narration {narration!r}")
        config = manifest.config
        instances = [
            i
            for i in load_actions(config["actions"])
            if i.narration_id == narration
        ]
        if not instances:
            _fail(f"actions file has no instance {narration!r}")
        pair = select_frame_pair(
            instances[0], config["frames_dir"], int(config.get("frame_padding", 10))
        )
        strategies = [s["kind"] for s in config["strategies"]]
        modes = list(config["prompt_modes"])
        masks = {}
        outputs = {}
        errors = {}
        for cell in cells:
            if cell.mask_file and cell.strategy not in masks:
                masks[cell.strategy] = load_mask(manifest_dir / cell.mask_file)
            if cell.output_file:
                outputs[(cell.strategy, cell.prompt_mode)] = load_frame(
                    manifest_dir / cell.output_file
                )
            elif cell.error:
                errors[(cell.strategy, cell.prompt_mode)] = "error"
        image = contact_sheet(pair, strategies, modes, masks, outputs, errors)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        save_frame(image, out_path)
    except (EffectcastError, OSError, KeyError, ValueError) as exc:
        _fail(str(exc))
    click.echo(f"{out_path}  {image.width}x{image.height}")


@main.command(name="report")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
def report_cmd(manifest_path, out_dir):
    """Write the cell table (CSV) and summary figures for a finished run."""
    from .report import write_report

    try:
        written = write_report(manifest_path, out_dir)
    except (EffectcastError, OSError) as exc:
        _fail(str(exc))
    for path in written:
        click.echo(str(path))


@main.command(name="convert")
@click.option("--kind", required=True, type=click.Choice(["detections", "segmentations"]))
@click.option("--source", required=True, type=click.Path(exists=True, path_type=Path), help="COCO-style instance JSON for one video.")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path), help="Intermediate per-video JSON to write.")
def convert_cmd(kind, source, out_path):
    """Convert upstream detector/segmenter output to the loader format."""
    from .convert import convert_coco_detections, convert_coco_segmentations

    try:
        if kind == "detections":
            count = convert_coco_detections(source, out_path)
        else:
            count = convert_coco_segmentations(source, out_path)
    except (EffectcastError, OSError) as exc:
        _fail(str(exc))
    click.echo(f"{out_path}: {count} records")


if __name__ == "__main__":
    main()
