"""Uniform client layer over image-generation and vision-coder providers.

Remote providers sit behind thin per-provider HTTP adapters; mock providers
(see mocks.py) make the whole pipeline runnable offline and deterministically.
All provider traffic goes through ProviderGateway, which owns retries,
rate limiting, idempotency, and the append-only record stores.
"""
from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, Iterable, Protocol

from .design import ModelSpec, StudyCell, StudyConfig, VlmCoderSpec
from .store import IMAGES_LOG, RAW_OUTPUTS_LOG, StudyStore

MOCK_TIMESTAMP = "1970-01-01T00:00:00Z"  # pinned so same-seed mock runs are byte-identical


class ProviderError(RuntimeError):
    """Provider call failed (after retries when raised from the gateway)."""


@dataclass(frozen=True)
class ImageRecord:
    cell_id: str
    image_ref: str
    width: int
    height: int
    prompt_text: str
    generated_at: str
    provider_metadata: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ImageRecord":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class RawCoderOutput:
    cell_id: str
    coder_id: str
    raw_text: str
    attempt: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RawCoderOutput":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


class ImageProvider(Protocol):
    def generate(self, cell: StudyCell, prompt: str) -> tuple[bytes, dict[str, str]]:
        """Return (image bytes, provider metadata)."""


class CoderProvider(Protocol):
    def code(self, cell: StudyCell, image_bytes: bytes, prompt_text: str) -> str:
        """Return the provider's raw text response."""


class TokenBucket:
    """Per-provider rate limiter; rate <= 0 disables limiting."""

    def __init__(self, rate_per_sec: float, burst: int = 1):
        self.rate = rate_per_sec
        self.capacity = max(1, burst)
        self.tokens = float(self.capacity)
        self.updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if self.rate <= 0:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            time.sleep(wait)


def _env_credential(endpoint_config: dict) -> str | None:
    # Secrets come only from environment variables named per provider.
    env_name = endpoint_config.get("api_key_env")
    if not env_name:
        return None
    value = os.environ.get(env_name)
    if value is None:
        raise ProviderError(f"credential environment variable {env_name!r} is not set")
    return value


def _http_post_json(url: str, payload: dict, api_key: str | None, timeout: float) -> dict:
    body = json.dumps(payload).encode("utf-8")
    req = urllib.request.Request(url, data=body, method="POST",
                                 headers={"Content-Type": "application/json"})
    if api_key:
        req.add_header("Authorization", f"Bearer {api_key}")
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))
    except (urllib.error.URLError, urllib.error.HTTPError, TimeoutError, OSError) as exc:
        raise ProviderError(f"POST {url} failed: {exc}") from exc


class RemoteImageProvider:
    """Generic JSON adapter: POST {prompt, width, height} -> {image_b64, ...}.

    endpoint_config: url, api_key_env, optional timeout_sec. Provider-specific
    bridges (e.g. for services without official APIs) can replace this class
    as long as they satisfy ImageProvider.
    """

    def __init__(self, model: ModelSpec, image_size: int):
        self.model = model
        self.image_size = image_size
        self.cfg = dict(model.endpoint_config)

    def generate(self, cell: StudyCell, prompt: str) -> tuple[bytes, dict[str, str]]:
        url = self.cfg.get("url")
        if not url:
            raise ProviderError(f"model {self.model.id!r} has no endpoint url configured")
        resp = _http_post_json(url, {
            "prompt": prompt,
            "width": self.image_size,
            "height": self.image_size,
        }, _env_credential(self.cfg), float(self.cfg.get("timeout_sec", 120)))
        if "image_b64" not in resp:
            raise ProviderError(f"model {self.model.id!r} returned no image payload")
        try:
            data = base64.b64decode(resp["image_b64"], validate=True)
        except Exception as exc:
            raise ProviderError(f"model {self.model.id!r} returned malformed image payload") from exc
        meta = {str(k): str(v) for k, v in resp.items() if k != "image_b64"}
        return data, meta


class RemoteVlmCoder:
    """Generic JSON adapter: POST {prompt, image_b64} -> {text}."""

    def __init__(self, coder: VlmCoderSpec, endpoint_config: dict | None = None):
        self.coder = coder
        self.cfg = dict(endpoint_config or {})

    def generate_config_key(self) -> str:
        return self.coder.id

    def code(self, cell: StudyCell, image_bytes: bytes, prompt_text: str) -> str:
        url = self.cfg.get("url")
        if not url:
            raise ProviderError(f"coder {self.coder.id!r} has no endpoint url configured")
        resp = _http_post_json(url, {
            "prompt": prompt_text,
            "image_b64": base64.b64encode(image_bytes).decode("ascii"),
        }, _env_credential(self.cfg), float(self.cfg.get("timeout_sec", 120)))
        return str(resp.get("text", ""))


class ProviderGateway:
    """Retry/ratelimit/idempotency wrapper around providers, bound to a store."""

    def __init__(self, store: StudyStore, config: StudyConfig,
                 image_providers: dict[str, ImageProvider],
                 coder_providers: dict[str, CoderProvider],
                 sleep: Callable[[float], None] = time.sleep):
        self.store = store
        self.config = config
        self.image_providers = image_providers
        self.coder_providers = coder_providers
        self.sleep = sleep
        self._buckets: dict[str, TokenBucket] = {}

    def _bucket(self, provider_id: str, is_mock: bool) -> TokenBucket:
        if provider_id not in self._buckets:
            rate = 0.0 if is_mock else self.config.rate_limit_per_sec
            self._buckets[provider_id] = TokenBucket(rate)
        return self._buckets[provider_id]

    def _with_retries(self, provider_id: str, call: Callable[[], object]) -> tuple[object, int]:
        attempts = max(1, self.config.retry_attempts)
        delay = self.config.retry_backoff_base
        last: Exception | None = None
        for attempt in range(1, attempts + 1):
            try:
                return call(), attempt
            except ProviderError as exc:
                last = exc
                if attempt < attempts:
                    self.sleep(delay)
                    delay *= 2
        raise ProviderError(f"{provider_id}: all {attempts} attempts failed: {last}") from last

    # -- image generation ----------------------------------------------------

    def existing_image(self, cell_id: str) -> ImageRecord | None:
        rec = self.store.latest_by_key(IMAGES_LOG, "cell_id").get((cell_id,))
        return ImageRecord.from_dict(rec) if rec else None

    def _produce_record(self, cell: StudyCell, prompt: str,
                        model: ModelSpec) -> ImageRecord:
        """Provider call + byte persistence; the caller appends the record."""
        provider = self.image_providers[model.id]
        is_mock = model.provider_kind == "mock"
        self._bucket(model.id, is_mock).acquire()
        (data, meta), _attempt = self._with_retries(
            model.id, lambda: provider.generate(cell, prompt))
        image_ref = self.store.put_image_bytes(data)
        return ImageRecord(
            cell_id=cell.cell_id,
            image_ref=image_ref,
            width=self.config.image_size,
            height=self.config.image_size,
            prompt_text=prompt,
            generated_at=MOCK_TIMESTAMP if is_mock else _utc_now(),
            provider_metadata={"model": model.id, **meta},
        )

    def generate_image(self, cell: StudyCell, prompt: str, model: ModelSpec,
                       force: bool = False) -> ImageRecord:
        existing = self.existing_image(cell.cell_id)
        if existing is not None and not force:
            return existing
        try:
            record = self._produce_record(cell, prompt, model)
        except ProviderError:
            self.store.audit("generation_failed", cell_id=cell.cell_id, model=model.id)
            raise
        self.store.append(IMAGES_LOG, record.to_dict())
        return record

    def generate_all(self, cells_with_prompts: Iterable[tuple[StudyCell, str]],
                     parallel: int = 4, force: bool = False) -> tuple[list[ImageRecord], list[str]]:
        """Generate every cell with a bounded worker pool.

        Provider calls run concurrently; records are appended in cell order
        as results stream back, so the record log is deterministic for
        deterministic providers. Returns (records, failed cell_ids).
        """
        todo = sorted(cells_with_prompts, key=lambda item: item[0].cell_id)
        existing = {key[0]: ImageRecord.from_dict(rec) for key, rec
                    in self.store.latest_by_key(IMAGES_LOG, "cell_id").items()}
        records: list[ImageRecord] = []
        failures: list[str] = []

        def work(item: tuple[StudyCell, str]) -> ImageRecord | ProviderError:
            cell, prompt = item
            if not force and cell.cell_id in existing:
                return existing[cell.cell_id]
            try:
                return self._produce_record(cell, prompt, self.config.model(cell.model))
            except ProviderError as exc:
                return exc

        with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
            for (cell, _prompt), result in zip(todo, pool.map(work, todo)):
                if isinstance(result, ProviderError):
                    self.store.audit("generation_failed", cell_id=cell.cell_id,
                                     model=cell.model)
                    failures.append(cell.cell_id)
                    continue
                if force or cell.cell_id not in existing:
                    self.store.append(IMAGES_LOG, result.to_dict())
                records.append(result)
        return records, failures

    # -- vision coding ---------------------------------------------------------

    def verify_image(self, record: ImageRecord) -> bytes:
        data = self.store.get_image_bytes(record.image_ref)
        digest = hashlib.sha256(data).hexdigest()
        if f"sha256:{digest}" != record.image_ref:
            raise ProviderError(f"stored bytes for {record.cell_id} do not match {record.image_ref}")
        return data

    def code_image(self, image: ImageRecord, coder: VlmCoderSpec,
                   prompt_text: str) -> RawCoderOutput:
        """One coder call; raw text is captured verbatim with its attempt count.

        attempt counts provider attempts within this call, so it never
        exceeds the configured retry limit; a re-prompt shows up in the log
        as a second record for the same (cell, coder).
        """
        data = self.verify_image(image)
        provider = self.coder_providers[coder.id]
        is_mock = coder.provider_kind == "mock"
        self._bucket(f"coder:{coder.id}", is_mock).acquire()
        cell = StudyCell(*image.cell_id.split("--"), cell_id=image.cell_id)
        try:
            text, attempt = self._with_retries(
                coder.id, lambda: provider.code(cell, data, prompt_text))
        except ProviderError:
            self.store.audit("coding_failed", cell_id=image.cell_id, coder=coder.id)
            raise
        record = RawCoderOutput(cell_id=image.cell_id, coder_id=coder.id,
                                raw_text=str(text), attempt=attempt)
        self.store.append(RAW_OUTPUTS_LOG, record.to_dict())
        return record


def _utc_now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
