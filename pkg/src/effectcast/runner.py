"""Experiment orchestration.

``run`` walks the strategy x prompt-mode matrix over the selected action
instances: resize the start frame to backend size, build each strategy's
mask at source resolution and reduce it, produce each mode's prompt, call
the inpainting backend through a content-addressed cache, and write every
artifact (masks, prompts, outputs, per-instance contact sheets) plus a
manifest that records one cell per (instance, strategy, mode).

Failures are isolated per cell: a missing annotation file or a backend
error turns into an error record on the affected cells while the rest of
the run completes. Only configuration and initial load problems abort.

Reproducibility rules: cell records are sorted canonically before writing;
all randomness derives from the global seed via stable per-instance
hashing; cache keys are content hashes of the full request; file writes
land atomically. Rerunning an identical config with a deterministic
backend reproduces the manifest byte-for-byte once volatile fields
(wall-clock timestamps, elapsed milliseconds) are stripped.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from ._version import __version__
from .backends import (
    BACKEND_SIZE,
    InpaintBackend,
    InpaintRequest,
    MockInpaintBackend,
    RemoteInpaintBackend,
)
from .dataset import (
    ActionInstance,
    FramePair,
    load_actions,
    load_detections,
    load_segmentations,
    select_frame_pair,
)
from .errors import ConfigError, EffectcastError
from .hashing import derive_seed, seed_bytes
from .imaging import (
    Frame,
    downsample_mask,
    encode_frame_png,
    load_frame,
    resize_frame,
    save_mask,
)
from .masks import MaskKind, MaskStrategyConfig, build_mask
from .prompts import (
    CompletionClient,
    PromptMode,
    PromptSpec,
    RemoteCompletionClient,
    ScriptedCompletionClient,
    load_pairs,
    resolve_prompt,
)
from .sheet import contact_sheet

__all__ = [
    "BackendConfig",
    "CompletionConfig",
    "InstanceFilter",
    "RunConfig",
    "CellRecord",
    "RunManifest",
    "cache_key",
    "load_run_config",
    "parse_strategy_flag",
    "build_backend",
    "build_completion_client",
    "run",
    "strip_volatile",
    "MANIFEST_NAME",
]

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

DEFAULT_STRATEGIES = (
    MaskStrategyConfig(kind=MaskKind.FIXED),
    MaskStrategyConfig(kind=MaskKind.HAND_OBJECT),
    MaskStrategyConfig(kind=MaskKind.SEGMENTATION),
)
DEFAULT_PROMPT_MODES = (PromptMode.ACTION_PHRASE, PromptMode.EFFECT_DESCRIPTION)


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"
    endpoint: str | None = None
    timeout: float = 120.0
    max_attempts: int = 2
    settings: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("mock", "adapter"):
            raise ValueError(f"backend kind must be 'mock' or 'adapter', got {self.kind!r}")
        if self.kind == "adapter" and not self.endpoint:
            raise ValueError("adapter backend requires an endpoint URL")

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "endpoint": self.endpoint,
            "timeout": self.timeout,
            "max_attempts": self.max_attempts,
            "settings": dict(self.settings),
        }


@dataclass(frozen=True)
class CompletionConfig:
    kind: str = "scripted"
    endpoint: str | None = None
    credential_env: str | None = None
    debug: bool = False

    def __post_init__(self):
        if self.kind not in ("scripted", "remote"):
            raise ValueError(f"completion kind must be 'scripted' or 'remote', got {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote completion requires an endpoint URL")

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "endpoint": self.endpoint,
            "credential_env": self.credential_env,
            "debug": self.debug,
        }


@dataclass(frozen=True)
class InstanceFilter:
    """Criteria are combined with AND; unset criteria match everything."""

    narration_ids: tuple[str, ...] | None = None
    verb: str | None = None
    noun: str | None = None

    def matches(self, instance: ActionInstance) -> bool:
        if self.narration_ids is not None and instance.narration_id not in self.narration_ids:
            return False
        if self.verb is not None and instance.verb != self.verb:
            return False
        if self.noun is not None and instance.noun != self.noun:
            return False
        return True

    def as_dict(self) -> dict:
        return {
            "narration_ids": list(self.narration_ids) if self.narration_ids else None,
            "verb": self.verb,
            "noun": self.noun,
        }


@dataclass(frozen=True)
class RunConfig:
    actions: Path
    frames_dir: Path
    output_dir: Path
    detections_dir: Path | None = None
    segmentations_dir: Path | None = None
    pairs: Path | None = None
    strategies: tuple[MaskStrategyConfig, ...] = DEFAULT_STRATEGIES
    prompt_modes: tuple[PromptMode, ...] = DEFAULT_PROMPT_MODES
    backend: BackendConfig = BackendConfig()
    completion: CompletionConfig = CompletionConfig()
    seed: int = 0
    parallelism: int = 1
    frame_padding: int = 10
    exemplar_count: int = 2
    max_tokens: int = 48
    temperature: float = 0.0
    filter: InstanceFilter = InstanceFilter()

    def __post_init__(self):
        if not self.strategies:
            raise ValueError("at least one mask strategy is required")
        if not self.prompt_modes:
            raise ValueError("at least one prompt mode is required")
        kinds = [s.kind for s in self.strategies]
        if len(set(kinds)) != len(kinds):
            raise ValueError("strategy kinds must be unique within a run")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")
        object.__setattr__(self, "prompt_modes", tuple(PromptMode(m) for m in self.prompt_modes))

    def as_dict(self) -> dict:
        return {
            "actions": str(self.actions),
            "frames_dir": str(self.frames_dir),
            "output_dir": str(self.output_dir),
            "detections_dir": str(self.detections_dir) if self.detections_dir else None,
            "segmentations_dir": str(self.segmentations_dir) if self.segmentations_dir else None,
            "pairs": str(self.pairs) if self.pairs else None,
            "strategies": [s.as_dict() for s in self.strategies],
            "prompt_modes": [m.value for m in self.prompt_modes],
            "backend": self.backend.as_dict(),
            "completion": self.completion.as_dict(),
            "seed": self.seed,
            "parallelism": self.parallelism,
            "frame_padding": self.frame_padding,
            "exemplar_count": self.exemplar_count,
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
            "filter": self.filter.as_dict(),
        }


_CONFIG_PATH_KEYS = ("actions", "frames_dir", "output_dir", "detections_dir", "segmentations_dir", "pairs")
_CONFIG_KEYS = set(_CONFIG_PATH_KEYS) | {
    "strategies",
    "prompt_modes",
    "backend",
    "completion",
    "seed",
    "parallelism",
    "frame_padding",
    "exemplar_count",
    "max_tokens",
    "temperature",
    "filter",
}


def parse_strategy_flag(value: str) -> MaskStrategyConfig:
    """Parse a CLI strategy flag: a kind name, optionally followed by
    colon-separated settings, e.g. ``hand_object:score_threshold=0.3,dilation_radius=2``.
    """
    kind, _, rest = value.partition(":")
    data: dict[str, object] = {"kind": kind.strip()}
    if rest.strip():
        for item in rest.split(","):
            key, sep, raw = item.partition("=")
            if not sep:
                raise ConfigError(f"strategy setting {item!r} is not key=value")
            key = key.strip()
            raw = raw.strip()
            if key in ("fixed_fraction", "score_threshold"):
                data[key] = float(raw)
            elif key == "dilation_radius":
                data[key] = int(raw)
            elif key in ("fallback", "noun_filter"):
                data[key] = raw
            else:
                raise ConfigError(f"unknown strategy setting {key!r}")
    try:
        return MaskStrategyConfig.from_mapping(data)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _coerce_strategies(raw: object) -> tuple[MaskStrategyConfig, ...]:
    if not isinstance(raw, (list, tuple)):
        raise ConfigError("'strategies' must be a list")
    out = []
    for item in raw:
        if isinstance(item, str):
            out.append(parse_strategy_flag(item))
        elif isinstance(item, MaskStrategyConfig):
            out.append(item)
        elif isinstance(item, dict):
            try:
                out.append(MaskStrategyConfig.from_mapping(item))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        else:
            raise ConfigError(f"strategy entry {item!r} is neither a name nor an object")
    return tuple(out)


def load_run_config(
    config_path: str | Path | None = None, overrides: Mapping[str, object] | None = None
) -> RunConfig:
    """Assemble a RunConfig from an optional JSON file plus CLI overrides.

    Non-null override values win over file values. Relative paths from the
    file resolve against the file's directory; override paths resolve
    against the working directory. Raises ConfigError for unknown keys,
    missing required paths, or invalid values.
    """
    data: dict[str, object] = {}
    base = Path.cwd()
    if config_path is not None:
        config_path = Path(config_path)
        try:
            with config_path.open(encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{config_path}: not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{config_path}: config must be a JSON object")
        base = config_path.parent
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"{config_path}: unknown config keys: {sorted(unknown)}")
        for key in _CONFIG_PATH_KEYS:
            if data.get(key) is not None:
                data[key] = base / str(data[key])
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config override {key!r}")
        if key in _CONFIG_PATH_KEYS:
            value = Path(value)
        if key in ("backend", "completion", "filter") and isinstance(value, dict):
            merged = dict(data[key]) if isinstance(data.get(key), dict) else {}
            merged.update({k: v for k, v in value.items() if v is not None})
            value = merged
        data[key] = value
    for key in ("actions", "frames_dir", "output_dir"):
        if data.get(key) is None:
            raise ConfigError(f"config is missing required path {key!r}")
    if "strategies" in data:
        data["strategies"] = _coerce_strategies(data["strategies"])
    if "prompt_modes" in data:
        raw_modes = data["prompt_modes"]
        if not isinstance(raw_modes, (list, tuple)):
            raise ConfigError("'prompt_modes' must be a list")
        try:
            data["prompt_modes"] = tuple(PromptMode(m) for m in raw_modes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    for key, cls in (("backend", BackendConfig), ("completion", CompletionConfig)):
        if key in data and isinstance(data[key], dict):
            try:
                data[key] = cls(**data[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad {key} config: {exc}") from exc
    if "filter" in data and isinstance(data["filter"], dict):
        raw_filter = dict(data["filter"])
        if raw_filter.get("narration_ids") is not None:
            raw_filter["narration_ids"] = tuple(raw_filter["narration_ids"])
        try:
            data["filter"] = InstanceFilter(**raw_filter)
        except TypeError as exc:
            raise ConfigError(f"bad filter config: {exc}") from exc
    try:
        return RunConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def build_backend(config: BackendConfig) -> InpaintBackend:
    if config.kind == "mock":
        return MockInpaintBackend()
    return RemoteInpaintBackend(
        config.endpoint,
        timeout=config.timeout,
        max_attempts=config.max_attempts,
        settings=config.settings,
    )


def build_completion_client(config: CompletionConfig) -> CompletionClient:
    if config.kind == "scripted":
        return ScriptedCompletionClient()
    return RemoteCompletionClient(
        config.endpoint, credential_env=config.credential_env, debug=config.debug
    )


# --------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class CellRecord:
    """One (instance, strategy, prompt mode) cell of the run matrix."""

    narration_id: str
    strategy: str
    prompt_mode: str
    prompt: str | None = None
    mask_file: str | None = None
    output_file: str | None = None
    cache_key: str | None = None
    backend_id: str | None = None
    elapsed_ms: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "narration_id": self.narration_id,
            "strategy": self.strategy,
            "prompt_mode": self.prompt_mode,
            "prompt": self.prompt,
            "mask_file": self.mask_file,
            "output_file": self.output_file,
            "cache_key": self.cache_key,
            "backend_id": self.backend_id,
            "elapsed_ms": self.elapsed_ms,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CellRecord":
        return cls(**{k: data.get(k) for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class RunManifest:
    """Reproducible record of one run: config snapshot, one record per
    cell, and the derived sheet artifacts."""

    version: str
    started_at: str
    finished_at: str
    seed: int
    backend_id: str
    config: Mapping[str, object]
    cells: tuple[CellRecord, ...]
    sheets: Mapping[str, str]

    def to_dict(self) -> dict:
        return {
            "tool": "effectcast",
            "version": self.version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "seed": self.seed,
            "backend_id": self.backend_id,
            "config": dict(self.config),
            "cells": [cell.to_dict() for cell in self.cells],
            "sheets": dict(self.sheets),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RunManifest":
        return cls(
            version=data.get("version", ""),
            started_at=data.get("started_at", ""),
            finished_at=data.get("finished_at", ""),
            seed=int(data.get("seed", 0)),
            backend_id=data.get("backend_id", ""),
            config=dict(data.get("config", {})),
            cells=tuple(CellRecord.from_dict(c) for c in data.get("cells", [])),
            sheets=dict(data.get("sheets", {})),
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        with Path(path).open(encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def error_cells(self) -> list[CellRecord]:
        return [c for c in self.cells if c.error is not None]


def strip_volatile(manifest: Mapping) -> dict:
    """Manifest dict minus wall-clock fields, for byte-level comparison.

    Drops started_at/finished_at and each cell's elapsed_ms; everything
    else in a deterministic-backend run is reproducible.
    """
    out = {k: v for k, v in manifest.items() if k not in ("started_at", "finished_at")}
    out["cells"] = [
        {k: v for k, v in cell.items() if k != "elapsed_ms"} for cell in manifest.get("cells", [])
    ]
    return out


def cache_key(request: InpaintRequest, backend_id: str) -> str:
    """Content hash of the full request: sha256 over length-prefixed
    (backend id, prompt, seed, frame bytes, mask bytes)."""
    h = hashlib.sha256()
    parts = (
        backend_id.encode("utf-8"),
        request.prompt.encode("utf-8"),
        seed_bytes(request.seed),
        request.frame.tobytes(),
        request.mask.bits.tobytes(),
    )
    for part in parts:
        h.update(len(part).to_bytes(8, "little"))
        h.update(part)
    return h.hexdigest()


# --------------------------------------------------------------------------
# run


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def _describe(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_save_frame(frame: Frame, path: Path) -> None:
    _atomic_write_bytes(path, encode_frame_png(frame))


@dataclass
class _InstancePrep:
    """Everything shared by one instance's cells, or the error that stops it."""

    instance: ActionInstance
    pair: FramePair | None = None
    start64: Frame | None = None
    pair_error: str | None = None
    masks: dict = field(default_factory=dict)
    mask_files: dict = field(default_factory=dict)
    mask_errors: dict = field(default_factory=dict)
    prompts: dict = field(default_factory=dict)
    prompt_files: dict = field(default_factory=dict)
    prompt_errors: dict = field(default_factory=dict)


def _prepare_instance(
    config: RunConfig,
    instance: ActionInstance,
    out_dir: Path,
    client: CompletionClient | None,
    pairs: Sequence,
) -> _InstancePrep:
    prep = _InstancePrep(instance=instance)
    nid = instance.narration_id
    try:
        prep.pair = select_frame_pair(instance, config.frames_dir, config.frame_padding)
        prep.start64 = resize_frame(prep.pair.start, BACKEND_SIZE, BACKEND_SIZE)
    except Exception as exc:
        prep.pair_error = _describe(exc)
        return prep

    width, height = prep.pair.start.width, prep.pair.start.height
    for strategy in config.strategies:
        kind = strategy.kind.value
        try:
            detections = ()
            regions = ()
            if strategy.kind is MaskKind.HAND_OBJECT:
                if config.detections_dir is None:
                    raise ConfigError("hand_object strategy requires detections_dir")
                detections = load_detections(
                    Path(config.detections_dir) / f"{instance.video_id}.json",
                    instance.start_frame,
                )
            elif strategy.kind is MaskKind.SEGMENTATION:
                if config.segmentations_dir is None:
                    raise ConfigError("segmentation strategy requires segmentations_dir")
                regions = load_segmentations(
                    Path(config.segmentations_dir) / f"{instance.video_id}.json",
                    instance.start_frame,
                )
            source_mask = build_mask(strategy, width, height, detections, regions)
            mask64 = downsample_mask(source_mask, BACKEND_SIZE, BACKEND_SIZE)
            rel = f"masks/{nid}__{kind}.png"
            save_mask(mask64, out_dir / rel)
            prep.masks[kind] = mask64
            prep.mask_files[kind] = rel
        except Exception as exc:
            prep.mask_errors[kind] = _describe(exc)

    for mode in config.prompt_modes:
        try:
            spec = PromptSpec(
                mode=mode,
                seed=config.seed,
                exemplar_count=config.exemplar_count,
                max_tokens=config.max_tokens,
                temperature=config.temperature,
            )
            text = resolve_prompt(instance, spec, client, pairs)
            rel = f"prompts/{nid}__{mode.value}.txt"
            _atomic_write_bytes(out_dir / rel, (text + "\n").encode("utf-8"))
            prep.prompts[mode.value] = text
            prep.prompt_files[mode.value] = rel
        except Exception as exc:
            prep.prompt_errors[mode.value] = _describe(exc)

    return prep


def _cell_task(
    config: RunConfig,
    backend: InpaintBackend,
    gate,
    out_dir: Path,
    prep: _InstancePrep,
    kind: str,
    mode: str,
) -> CellRecord:
    nid = prep.instance.narration_id
    base = dict(narration_id=nid, strategy=kind, prompt_mode=mode)
    if prep.pair_error is not None:
        return CellRecord(**base, error=prep.pair_error)
    prompt = prep.prompts.get(mode)
    mask_file = prep.mask_files.get(kind)
    if kind in prep.mask_errors:
        return CellRecord(**base, prompt=prompt, error=prep.mask_errors[kind])
    if mode in prep.prompt_errors:
        return CellRecord(**base, mask_file=mask_file, error=prep.prompt_errors[mode])
    try:
        request = InpaintRequest(
            frame=prep.start64,
            mask=prep.masks[kind],
            prompt=prompt,
            seed=derive_seed(config.seed, nid),
        )
        key = cache_key(request, backend.descriptor.id)
        cache_rel = f"cache/{key[:2]}/{key}.png"
        cache_path = out_dir / cache_rel
        if cache_path.is_file():
            result_frame = load_frame(cache_path)
            elapsed = 0.0
        else:
            with gate:
                result = backend.inpaint(request)
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            _atomic_save_frame(result.frame, cache_path)
            result_frame = result.frame
            elapsed = result.elapsed_ms
        out_rel = f"outputs/{nid}__{kind}__{mode}.png"
        _atomic_save_frame(result_frame, out_dir / out_rel)
        return CellRecord(
            **base,
            prompt=prompt,
            mask_file=mask_file,
            output_file=out_rel,
            cache_key=key,
            backend_id=backend.descriptor.id,
            elapsed_ms=elapsed,
        )
    except Exception as exc:
        return CellRecord(**base, prompt=prompt, mask_file=mask_file, error=_describe(exc))


def run(
    config: RunConfig,
    backend: InpaintBackend | None = None,
    completion_client: CompletionClient | None = None,
) -> RunManifest:
    """Execute the full matrix and return the manifest (also written to
    ``output_dir/manifest.json``).

    ``backend`` and ``completion_client`` may be injected, mainly so tests
    can observe call counters; by default they are built from the config.
    """
    started_at = _utc_now()
    try:
        instances = [i for i in load_actions(config.actions) if config.filter.matches(i)]
    except (OSError, EffectcastError) as exc:
        raise ConfigError(f"cannot load actions: {exc}") from exc
    if not instances:
        raise ConfigError("instance filter selected no instances")

    need_effect = PromptMode.EFFECT_DESCRIPTION in config.prompt_modes
    pairs = []
    if need_effect:
        if config.pairs is None:
            raise ConfigError("effect_description mode requires a pairs file")
        try:
            pairs = load_pairs(config.pairs)
        except (OSError, EffectcastError) as exc:
            raise ConfigError(f"cannot load pairs: {exc}") from exc
        if len(pairs) < config.exemplar_count:
            raise ConfigError(
                f"pairs file provides {len(pairs)} exemplars, "
                f"need at least {config.exemplar_count}"
            )

    if backend is None:
        backend = build_backend(config.backend)
    if completion_client is None and need_effect:
        completion_client = build_completion_client(config.completion)

    out_dir = Path(config.output_dir)
    try:
        for sub in ("masks", "outputs", "prompts", "sheets", "cache"):
            (out_dir / sub).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}") from exc

    preps = [
        _prepare_instance(config, instance, out_dir, completion_client, pairs)
        for instance in instances
    ]

    cap = backend.descriptor.max_concurrency
    gate = threading.Semaphore(cap) if cap is not None else nullcontext()
    tasks = [
        (prep, strategy.kind.value, mode.value)
        for prep in preps
        for strategy in config.strategies
        for mode in config.prompt_modes
    ]
    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            cells = list(
                pool.map(
                    lambda t: _cell_task(config, backend, gate, out_dir, *t),
                    tasks,
                )
            )
    else:
        cells = [_cell_task(config, backend, gate, out_dir, *task) for task in tasks]

    cells.sort(key=lambda c: (c.narration_id, c.strategy, c.prompt_mode))

    sheets: dict[str, str] = {}
    strategy_names = [s.kind.value for s in config.strategies]
    mode_names = [m.value for m in config.prompt_modes]
    by_key = {(c.narration_id, c.strategy, c.prompt_mode): c for c in cells}
    for prep in preps:
        if prep.pair is None:
            continue
        nid = prep.instance.narration_id
        outputs = {}
        errors = {}
        for kind in strategy_names:
            if kind in prep.mask_errors:
                errors[(kind, "mask")] = "mask error"
            for mode in mode_names:
                cell = by_key[(nid, kind, mode)]
                if cell.output_file:
                    outputs[(kind, mode)] = load_frame(out_dir / cell.output_file)
                elif cell.error:
                    errors[(kind, mode)] = "error"
        sheet = contact_sheet(prep.pair, strategy_names, mode_names, prep.masks, outputs, errors)
        rel = f"sheets/{nid}.png"
        _atomic_save_frame(sheet, out_dir / rel)
        sheets[nid] = rel

    manifest = RunManifest(
        version=__version__,
        started_at=started_at,
        finished_at=_utc_now(),
        seed=config.seed,
        backend_id=backend.descriptor.id,
        config=config.as_dict(),
        cells=tuple(cells),
        sheets=sheets,
    )
    payload = json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n"
    _atomic_write_bytes(out_dir / MANIFEST_NAME, payload.encode("utf-8"))
    n_errors = len(manifest.error_cells())
    log.info(
        "run complete: %d cells, %d errors, %d sheets", len(cells), n_errors, len(sheets)
    )
    return manifest
