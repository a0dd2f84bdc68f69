"""Prompt production for the inpainting backend.

Two modes exist. ``action_phrase`` hands the raw phrase ("cut apple")
straight to the backend. ``effect_description`` asks a completion client to
continue a few-shot prompt built from exemplar action/effect pairs, then
parses the first line of the continuation as a one-sentence effect
description ("Apple is cut in half with a knife").

The few-shot template is fixed:

    Action: {exemplar action}
    Effect: {exemplar effect}

    Action: {query action}
    Effect:

Exemplars are drawn without replacement by a seeded generator; the runner
derives a per-instance seed so different instances see different exemplars
while whole runs stay reproducible.
"""

from __future__ import annotations

import logging
import os
import random
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import requests

from .dataset import ActionInstance
from .errors import (
    CompletionTransportError,
    EmptyCompletionError,
    InsufficientExemplarsError,
    RecordError,
)
from .hashing import derive_seed

__all__ = [
    "ActionEffectPair",
    "PromptMode",
    "PromptSpec",
    "ClientDescriptor",
    "CompletionClient",
    "ScriptedCompletionClient",
    "RemoteCompletionClient",
    "DEFAULT_SCRIPTED_EFFECTS",
    "STOP_SEQUENCE",
    "passthrough_prompt",
    "load_pairs",
    "build_fewshot_prompt",
    "parse_effect",
    "effect_prompt",
    "resolve_prompt",
]

log = logging.getLogger(__name__)

STOP_SEQUENCE = "\n\n"


@dataclass(frozen=True)
class ActionEffectPair:
    """One exemplar: an action phrase and its one-sentence effect."""

    action: str
    effect: str

    def __post_init__(self):
        for name, value in (("action", self.action), ("effect", self.effect)):
            if not value.strip():
                raise ValueError(f"pair {name} must be non-empty")
            if "\n" in value or "\r" in value:
                raise ValueError(f"pair {name} must be a single line: {value!r}")


class PromptMode(str, Enum):
    ACTION_PHRASE = "action_phrase"
    EFFECT_DESCRIPTION = "effect_description"


@dataclass(frozen=True)
class PromptSpec:
    mode: PromptMode
    seed: int = 0
    exemplar_count: int = 2
    max_tokens: int = 48
    temperature: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", PromptMode(self.mode))
        if self.exemplar_count < 1:
            raise ValueError(f"exemplar_count must be >= 1, got {self.exemplar_count}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class ClientDescriptor:
    """Declares a completion client's identity and execution guarantees.

    max_concurrency None means the client tolerates unbounded concurrent
    calls; 1 means callers must serialize.
    """

    id: str
    deterministic: bool
    max_concurrency: int | None = None


class CompletionClient(ABC):
    """Contract for text-completion providers.

    Implementations must honor stop_sequences (truncate the continuation at
    the first occurrence) and be deterministic at temperature 0, or declare
    otherwise in their descriptor.
    """

    @property
    @abstractmethod
    def descriptor(self) -> ClientDescriptor: ...

    @abstractmethod
    def complete(
        self,
        prompt_text: str,
        max_tokens: int,
        temperature: float,
        stop_sequences: Sequence[str] = (),
    ) -> str: ...


def _truncate_at(text: str, stop_sequences: Sequence[str]) -> str:
    for stop in stop_sequences:
        idx = text.find(stop)
        if idx != -1:
            text = text[:idx]
    return text


def passthrough_prompt(instance: ActionInstance) -> str:
    """The raw action phrase, unchanged."""
    return instance.phrase


def load_pairs(path: str | Path) -> list[ActionEffectPair]:
    """Read exemplar pairs from a UTF-8 file, one "action<TAB>effect" per line.

    Lines starting with "#" and blank lines are skipped. Raises RecordError
    for a line without a tab or with an empty field.
    """
    path = Path(path)
    pairs: list[ActionEffectPair] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise RecordError(f"{path} line {lineno}: expected action<TAB>effect")
            action, effect = line.split("\t", 1)
            try:
                pairs.append(ActionEffectPair(action=action.strip(), effect=effect.strip()))
            except ValueError as exc:
                raise RecordError(f"{path} line {lineno}: {exc}") from exc
    return pairs


def build_fewshot_prompt(
    pairs: Sequence[ActionEffectPair], k: int, action: str, seed: int
) -> str:
    """Render the few-shot prompt for one query action.

    Picks k distinct exemplars uniformly without replacement with a
    generator seeded by ``seed``; identical inputs give byte-identical
    prompts. Raises InsufficientExemplarsError when k exceeds the pool.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > len(pairs):
        raise InsufficientExemplarsError(
            f"need {k} exemplars but only {len(pairs)} pairs are available"
        )
    chosen = random.Random(seed).sample(list(pairs), k)
    blocks = [f"Action: {p.action}\nEffect: {p.effect}\n\n" for p in chosen]
    return "".join(blocks) + f"Action: {action}\nEffect:"


def parse_effect(continuation: str) -> str:
    """First non-empty line of the continuation, stripped; keeps any period."""
    for line in continuation.splitlines():
        if line.strip():
            return line.strip()
    raise EmptyCompletionError("completion contained no non-empty line")


def effect_prompt(
    instance: ActionInstance,
    client: CompletionClient,
    pairs: Sequence[ActionEffectPair],
    spec: PromptSpec,
) -> str:
    """Full effect-description route: few-shot prompt, completion, parse.

    The exemplar draw is seeded per instance (spec.seed xor a stable hash of
    the narration id). Transport errors from the client propagate as-is.
    """
    if spec.mode is not PromptMode.EFFECT_DESCRIPTION:
        raise ValueError(f"effect_prompt called with mode {spec.mode.value}")
    instance_seed = derive_seed(spec.seed, instance.narration_id)
    prompt = build_fewshot_prompt(pairs, spec.exemplar_count, instance.phrase, instance_seed)
    continuation = client.complete(
        prompt,
        max_tokens=spec.max_tokens,
        temperature=spec.temperature,
        stop_sequences=(STOP_SEQUENCE,),
    )
    return parse_effect(continuation)


def resolve_prompt(
    instance: ActionInstance,
    spec: PromptSpec,
    client: CompletionClient | None = None,
    pairs: Sequence[ActionEffectPair] = (),
) -> str:
    """Dispatch on spec.mode; the effect route requires a client and pairs."""
    if spec.mode is PromptMode.ACTION_PHRASE:
        return passthrough_prompt(instance)
    if client is None:
        raise ValueError("effect_description mode requires a completion client")
    return effect_prompt(instance, client, pairs, spec)


DEFAULT_SCRIPTED_EFFECTS: Mapping[str, str] = {
    "cut apple": "Apple is cut in half with a knife",
    "add chicken": "After add chicken, there are now chicken in the pot.",
    "remove lid": "The lid is off and the pot stands open.",
}


class ScriptedCompletionClient(CompletionClient):
    """Offline test double: answers from a fixed action-to-effect table.

    The client finds the last "Action: ..." line of the prompt, looks the
    phrase up in its table, and plays back the effect as a continuation in
    the exemplar format. Unknown actions get a deterministic fallback
    sentence. A call counter makes "the client was never consulted"
    observable in tests.
    """

    def __init__(self, effects: Mapping[str, str] | None = None):
        self._effects = dict(DEFAULT_SCRIPTED_EFFECTS if effects is None else effects)
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def descriptor(self) -> ClientDescriptor:
        return ClientDescriptor(id="scripted", deterministic=True, max_concurrency=None)

    @property
    def calls(self) -> int:
        with self._lock:
            return self._calls

    def complete(
        self,
        prompt_text: str,
        max_tokens: int,
        temperature: float,
        stop_sequences: Sequence[str] = (),
    ) -> str:
        with self._lock:
            self._calls += 1
        action = None
        for line in prompt_text.splitlines():
            if line.startswith("Action: "):
                action = line[len("Action: ") :].strip()
        if action is None:
            return ""
        effect = self._effects.get(action, f"After {action}, the effect is visible.")
        continuation = f" {effect}\n\nAction: ..."
        return _truncate_at(continuation, stop_sequences)


class RemoteCompletionClient(CompletionClient):
    """HTTP completion provider.

    POSTs {"prompt", "max_tokens", "temperature", "stop"} as JSON and
    expects {"completion": "..."} back. The bearer credential is read from
    an environment variable at call time and never logged; with debug
    logging enabled, request and response bodies are logged with the
    credential redacted.
    """

    def __init__(
        self,
        endpoint: str,
        credential_env: str | None = None,
        *,
        client_id: str = "remote",
        timeout: float = 30.0,
        max_concurrency: int | None = 1,
        debug: bool = False,
    ):
        self.endpoint = endpoint
        self.credential_env = credential_env
        self.timeout = timeout
        self.debug = debug
        self._descriptor = ClientDescriptor(
            id=client_id, deterministic=False, max_concurrency=max_concurrency
        )

    @property
    def descriptor(self) -> ClientDescriptor:
        return self._descriptor

    def complete(
        self,
        prompt_text: str,
        max_tokens: int,
        temperature: float,
        stop_sequences: Sequence[str] = (),
    ) -> str:
        body = {
            "prompt": prompt_text,
            "max_tokens": max_tokens,
            "temperature": temperature,
            "stop": list(stop_sequences),
        }
        headers = {}
        if self.credential_env:
            credential = os.environ.get(self.credential_env)
            if credential:
                headers["Authorization"] = f"Bearer {credential}"
        if self.debug:
            log.debug(
                "completion request to %s (auth: %s): %r",
                self.endpoint,
                "redacted" if "Authorization" in headers else "none",
                body,
            )
        try:
            response = requests.post(
                self.endpoint, json=body, headers=headers, timeout=self.timeout
            )
            response.raise_for_status()
            payload = response.json()
        except requests.RequestException as exc:
            raise CompletionTransportError(f"completion request failed: {exc}") from exc
        except ValueError as exc:
            raise CompletionTransportError(f"completion response not JSON: {exc}") from exc
        if self.debug:
            log.debug("completion response from %s: %r", self.endpoint, payload)
        if not isinstance(payload, dict) or "completion" not in payload:
            raise CompletionTransportError(
                f"completion response missing 'completion' field: {payload!r}"
            )
        return _truncate_at(str(payload["completion"]), stop_sequences)
