"""Inpainting backend contract, a deterministic offline mock, and an HTTP
adapter for a text-conditioned diffusion inpainter.

Every backend works at exactly 64x64 and owes callers the preserve-region
invariant: output pixels where the mask is false are byte-identical to the
input. Backends that cannot guarantee this natively (diffusion samplers
cannot) must re-composite input pixels over the preserve region before
returning; the HTTP adapter does so unconditionally.
"""

from __future__ import annotations

import base64
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from hashlib import blake2b
from typing import Mapping

import numpy as np
import requests

from .errors import BackendUnavailableError, MalformedRequestError, MalformedResponseError
from .hashing import seed_bytes, stable_hash64
from .imaging import (
    Frame,
    Mask,
    decode_frame_png,
    encode_frame_png,
    encode_mask_png,
)

__all__ = [
    "BACKEND_SIZE",
    "InpaintRequest",
    "InpaintResult",
    "BackendDescriptor",
    "InpaintBackend",
    "MockInpaintBackend",
    "RemoteInpaintBackend",
    "mock_generate",
]

BACKEND_SIZE = 64


@dataclass(frozen=True)
class InpaintRequest:
    """One backend call: 64x64 frame and mask, a non-empty prompt, a seed."""

    frame: Frame
    mask: Mask
    prompt: str
    seed: int

    def __post_init__(self):
        for name, obj in (("frame", self.frame), ("mask", self.mask)):
            if (obj.width, obj.height) != (BACKEND_SIZE, BACKEND_SIZE):
                raise MalformedRequestError(
                    f"{name} must be {BACKEND_SIZE}x{BACKEND_SIZE}, "
                    f"got {obj.width}x{obj.height}"
                )
        if not self.prompt:
            raise MalformedRequestError("prompt must be non-empty")


@dataclass(frozen=True)
class InpaintResult:
    frame: Frame
    backend_id: str
    elapsed_ms: float
    meta: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class BackendDescriptor:
    """Identity and execution guarantees of a backend.

    max_concurrency None means unbounded concurrent calls are safe; an
    integer n means callers must not exceed n in flight.
    """

    id: str
    deterministic: bool
    max_concurrency: int | None = None

    def __post_init__(self):
        if self.max_concurrency is not None and self.max_concurrency < 1:
            raise ValueError(f"max_concurrency must be >= 1 or None, got {self.max_concurrency}")


class InpaintBackend(ABC):
    @property
    @abstractmethod
    def descriptor(self) -> BackendDescriptor: ...

    @abstractmethod
    def inpaint(self, request: InpaintRequest) -> InpaintResult: ...


def mock_generate(prompt: str, seed: int, n: int) -> bytes:
    """Deterministic RGB byte stream: 3*n bytes keyed by (prompt, seed).

    Counter-mode construction over keyed blake2b: block i is the 32-byte
    digest of the little-endian counter under a key derived from a stable
    64-bit hash of the prompt bytes and the seed. Stable across platforms
    and Python versions, so golden byte values can be committed.
    """
    if n < 0:
        raise ValueError(f"pixel count must be >= 0, got {n}")
    total = 3 * n
    if total == 0:
        return b""
    key = seed_bytes(stable_hash64(prompt.encode("utf-8"), seed_bytes(seed)))
    chunks = []
    counter = 0
    produced = 0
    while produced < total:
        block = blake2b(counter.to_bytes(8, "little"), digest_size=32, key=key).digest()
        chunks.append(block)
        produced += len(block)
        counter += 1
    return b"".join(chunks)[:total]


class MockInpaintBackend(InpaintBackend):
    """Offline test double: fills mask-true pixels from the deterministic
    byte stream, leaving everything else untouched.

    Pure function of the request, so the preserve-region invariant holds by
    construction and equal requests give byte-identical results. The call
    counter lets tests assert a warm cache never reaches the backend.
    """

    def __init__(self):
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(id="mock", deterministic=True, max_concurrency=None)

    @property
    def calls(self) -> int:
        with self._lock:
            return self._calls

    def inpaint(self, request: InpaintRequest) -> InpaintResult:
        started = time.perf_counter()
        with self._lock:
            self._calls += 1
        out = request.frame.pixels.copy()
        n = request.mask.count()
        if n:
            stream = mock_generate(request.prompt, request.seed, n)
            out[request.mask.bits] = np.frombuffer(stream, dtype=np.uint8).reshape(n, 3)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return InpaintResult(
            frame=Frame.from_array(out),
            backend_id=self.descriptor.id,
            elapsed_ms=elapsed_ms,
        )


class RemoteInpaintBackend(InpaintBackend):
    """HTTP adapter for an out-of-process text-conditioned inpainter.

    Wire format: POST JSON {"prompt", "seed", "image_b64", "mask_b64"}
    (base64 PNG payloads) and read back {"image_b64", "meta"}. The adapter
    re-composites the preserve region over the returned image, records the
    response meta (model-side settings such as steps or guidance) in the
    result, and retries transport failures once by default.
    """

    def __init__(
        self,
        endpoint: str,
        *,
        backend_id: str = "adapter",
        timeout: float = 120.0,
        max_attempts: int = 2,
        max_concurrency: int | None = 1,
        settings: Mapping[str, object] | None = None,
    ):
        if max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
        self.endpoint = endpoint
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.settings = dict(settings or {})
        self._descriptor = BackendDescriptor(
            id=backend_id, deterministic=False, max_concurrency=max_concurrency
        )

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def inpaint(self, request: InpaintRequest) -> InpaintResult:
        started = time.perf_counter()
        body = {
            "prompt": request.prompt,
            "seed": request.seed,
            "image_b64": base64.b64encode(encode_frame_png(request.frame)).decode("ascii"),
            "mask_b64": base64.b64encode(encode_mask_png(request.mask)).decode("ascii"),
        }
        if self.settings:
            body["settings"] = self.settings
        payload = self._post(body)
        frame = self._decode_frame(payload)
        composited = self._recomposite(request, frame)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        meta = payload.get("meta")
        return InpaintResult(
            frame=composited,
            backend_id=self._descriptor.id,
            elapsed_ms=elapsed_ms,
            meta=dict(meta) if isinstance(meta, dict) else {},
        )

    def _post(self, body: dict) -> dict:
        last_error: Exception | None = None
        for _ in range(self.max_attempts):
            try:
                response = requests.post(self.endpoint, json=body, timeout=self.timeout)
                response.raise_for_status()
                payload = response.json()
            except requests.RequestException as exc:
                last_error = exc
                continue
            except ValueError as exc:
                raise MalformedResponseError(f"backend response not JSON: {exc}") from exc
            if not isinstance(payload, dict):
                raise MalformedResponseError(f"backend response not an object: {payload!r}")
            return payload
        raise BackendUnavailableError(
            f"backend {self.endpoint} unreachable after {self.max_attempts} attempts: {last_error}"
        ) from last_error

    @staticmethod
    def _decode_frame(payload: dict) -> Frame:
        if "image_b64" not in payload:
            raise MalformedResponseError("backend response missing 'image_b64'")
        try:
            data = base64.b64decode(payload["image_b64"], validate=True)
            frame = decode_frame_png(data)
        except (ValueError, OSError) as exc:
            raise MalformedResponseError(f"backend image payload undecodable: {exc}") from exc
        if (frame.width, frame.height) != (BACKEND_SIZE, BACKEND_SIZE):
            raise MalformedResponseError(
                f"backend returned {frame.width}x{frame.height}, "
                f"expected {BACKEND_SIZE}x{BACKEND_SIZE}"
            )
        return frame

    @staticmethod
    def _recomposite(request: InpaintRequest, generated: Frame) -> Frame:
        out = generated.pixels.copy()
        preserve = ~request.mask.bits
        out[preserve] = request.frame.pixels[preserve]
        return Frame.from_array(out)
