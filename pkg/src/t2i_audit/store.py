"""Append-only study persistence.

A study lives in one directory: a manifest pinning the config hash, JSONL
logs (images, raw coder outputs, coding records, consensus, expert codes)
that are only ever appended to, a content-addressed image directory, and
derived CSV outputs that are rewritten atomically.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Iterable, Iterator

from .design import StudyConfig

SCHEMA_VERSION = 1

IMAGES_LOG = "images.jsonl"
RAW_OUTPUTS_LOG = "raw_outputs.jsonl"
CODING_LOG = "coding_records.jsonl"
CONSENSUS_LOG = "consensus.jsonl"
EXPERT_LOG = "expert_codes.jsonl"
AUDIT_LOG = "audit.jsonl"
QUEUE_FILE = "validation_queue.json"
SESSIONS_FILE = "sessions.json"


class StoreError(RuntimeError):
    pass


class StudyMismatchError(StoreError):
    """The directory belongs to a different study (config hash differs)."""


def config_hash(config: StudyConfig) -> str:
    canon = json.dumps(config.canonical_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _dump_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"


def atomic_write_text(path: Path, text: str) -> None:
    """Write via temp-file-then-rename so readers never see partial output."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    os.replace(tmp, path)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class StudyStore:
    """One study directory. Single writer, many readers.

    Appends are serialized by an internal lock; records are immutable once
    written, so readers can snapshot a log at any time.
    """

    def __init__(self, root: str | Path, config: StudyConfig):
        self.root = Path(root)
        self.config = config
        self._lock = threading.Lock()
        self.images_dir = self.root / "images"
        self.prompts_dir = self.root / "prompts"
        self.reports_dir = self.root / "reports"

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def open_or_init(cls, root: str | Path, config: StudyConfig) -> "StudyStore":
        store = cls(root, config)
        manifest_path = store.root / "manifest.json"
        chash = config_hash(config)
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text("utf-8"))
            if manifest.get("config_hash") != chash:
                raise StudyMismatchError(
                    f"{store.root} already holds a different study "
                    f"(manifest hash {manifest.get('config_hash', '?')[:12]}..., "
                    f"config hash {chash[:12]}...)")
            return store
        store.root.mkdir(parents=True, exist_ok=True)
        store.images_dir.mkdir(exist_ok=True)
        store.prompts_dir.mkdir(exist_ok=True)
        store.reports_dir.mkdir(exist_ok=True)
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "config_hash": chash,
            "prompt_versions": sorted({c.prompt_version for c in config.coders}
                                      | {config.prompt_template_version}),
            "models": [m.id for m in config.models],
            "coders": [c.id for c in config.coders],
        }
        atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return store

    def manifest(self) -> dict:
        return json.loads((self.root / "manifest.json").read_text("utf-8"))

    # -- JSONL logs --------------------------------------------------------

    def append(self, log_name: str, record: dict) -> None:
        with self._lock:
            with open(self.root / log_name, "a", encoding="utf-8", newline="") as fh:
                fh.write(_dump_line(record))

    def append_many(self, log_name: str, records: Iterable[dict]) -> None:
        with self._lock:
            with open(self.root / log_name, "a", encoding="utf-8", newline="") as fh:
                for record in records:
                    fh.write(_dump_line(record))

    def read_log(self, log_name: str) -> Iterator[dict]:
        path = self.root / log_name
        if not path.exists():
            return iter(())
        with open(path, encoding="utf-8") as fh:
            return iter([json.loads(line) for line in fh if line.strip()])

    def latest_by_key(self, log_name: str, *key_fields: str) -> dict[tuple, dict]:
        """Collapse an append-only log to the newest record per key."""
        out: dict[tuple, dict] = {}
        for record in self.read_log(log_name):
            out[tuple(record[f] for f in key_fields)] = record
        return out

    def audit(self, event: str, **details) -> None:
        self.append(AUDIT_LOG, {"event": event, **details})

    # -- content-addressed image bytes --------------------------------------

    def put_image_bytes(self, data: bytes, suffix: str = ".png") -> str:
        digest = hashlib.sha256(data).hexdigest()
        ref = f"sha256:{digest}"
        sub = self.images_dir / digest[:2]
        sub.mkdir(parents=True, exist_ok=True)
        path = sub / f"{digest}{suffix}"
        if not path.exists():
            atomic_write_bytes(path, data)
        return ref

    def image_path(self, image_ref: str) -> Path:
        digest = image_ref.split(":", 1)[1]
        sub = self.images_dir / digest[:2]
        matches = sorted(sub.glob(f"{digest}.*")) if sub.exists() else []
        if not matches:
            raise StoreError(f"image bytes missing for {image_ref}")
        return matches[0]

    def get_image_bytes(self, image_ref: str) -> bytes:
        return self.image_path(image_ref).read_bytes()

    # -- prompt version registry --------------------------------------------

    def register_prompt_version(self, version: str, text: str) -> None:
        """Versions are immutable: re-registering identical bytes is a no-op,
        different bytes is an error."""
        path = self.prompts_dir / f"{version}.txt"
        if path.exists():
            if path.read_text("utf-8") != text:
                raise StoreError(f"prompt version {version!r} already registered with different text")
            return
        self.prompts_dir.mkdir(exist_ok=True)
        atomic_write_text(path, text)

    def prompt_version_text(self, version: str) -> str:
        path = self.prompts_dir / f"{version}.txt"
        if not path.exists():
            raise KeyError(f"unknown prompt version {version!r}")
        return path.read_text("utf-8")

    def prompt_versions(self) -> list[str]:
        return sorted(p.stem for p in self.prompts_dir.glob("*.txt"))

    # -- derived documents ---------------------------------------------------

    def write_queue(self, queue_doc: dict) -> None:
        atomic_write_text(self.root / QUEUE_FILE,
                          json.dumps(queue_doc, indent=2, sort_keys=True) + "\n")

    def read_queue(self) -> dict | None:
        path = self.root / QUEUE_FILE
        if not path.exists():
            return None
        return json.loads(path.read_text("utf-8"))

    def write_sessions(self, sessions: list[dict]) -> None:
        atomic_write_text(self.root / SESSIONS_FILE,
                          json.dumps(sessions, indent=2, sort_keys=True) + "\n")

    def read_sessions(self) -> list[dict]:
        path = self.root / SESSIONS_FILE
        if not path.exists():
            return []
        return json.loads(path.read_text("utf-8"))

    def write_csv(self, name: str, text: str) -> Path:
        path = self.reports_dir / name
        atomic_write_text(path, text)
        return path
