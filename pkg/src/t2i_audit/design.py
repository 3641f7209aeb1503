"""Factorial study design: country/concept/model registries and cell groupings.

The audit crosses every country with every concept and every generation model.
Registries are data (loaded from a JSON study config), so the audited matrix
can be extended without code changes. Everything here is immutable after
construction and safe to share across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

REGION_WEST = "West"
REGION_EAST = "East"

CONCEPT_NATIONAL_IDENTITY = "national_identity"
CONCEPT_DEMOGRAPHIC = "demographic"
CONCEPT_CULTURAL_ARTIFACT = "cultural_artifact"

GROUPINGS = ("west_east", "english_core_vs_rest", "by_country", "by_concept", "by_model")


class ConfigError(ValueError):
    """Invalid study configuration (duplicate ids, bad enum values, ...)."""


class LookupError_(KeyError):
    """Unknown registry id."""


@dataclass(frozen=True)
class Country:
    id: str
    display_name: str
    region: str
    english_core: bool = False

    def __post_init__(self) -> None:
        if self.region not in (REGION_WEST, REGION_EAST):
            raise ConfigError(f"country {self.id!r}: region must be West or East, got {self.region!r}")
        if self.english_core and self.region != REGION_WEST:
            raise ConfigError(f"country {self.id!r}: english_core implies region West")


@dataclass(frozen=True)
class Concept:
    id: str
    display_name: str
    category: str

    def __post_init__(self) -> None:
        if self.category not in (CONCEPT_NATIONAL_IDENTITY, CONCEPT_DEMOGRAPHIC, CONCEPT_CULTURAL_ARTIFACT):
            raise ConfigError(f"concept {self.id!r}: unknown category {self.category!r}")


@dataclass(frozen=True)
class ModelSpec:
    id: str
    display_name: str
    provider_kind: str = "mock"
    endpoint_config: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.provider_kind not in ("remote_api", "mock"):
            raise ConfigError(f"model {self.id!r}: provider_kind must be remote_api or mock")


@dataclass(frozen=True)
class VlmCoderSpec:
    """One member of the vision-language coding ensemble."""

    id: str
    display_name: str
    provider_kind: str = "mock"
    prompt_version: str = "v1"

    def __post_init__(self) -> None:
        if self.provider_kind not in ("remote_api", "mock"):
            raise ConfigError(f"coder {self.id!r}: provider_kind must be remote_api or mock")


@dataclass(frozen=True)
class StudyCell:
    country: str
    concept: str
    model: str
    cell_id: str

    @staticmethod
    def make_id(country: str, concept: str, model: str) -> str:
        # Human-readable stable join key used across every store.
        return f"{country}--{concept}--{model}".lower()


@dataclass(frozen=True)
class StudyConfig:
    countries: tuple[Country, ...]
    concepts: tuple[Concept, ...]
    models: tuple[ModelSpec, ...]
    coders: tuple[VlmCoderSpec, ...]
    image_size: int = 1024
    prompt_template_version: str = "v1"
    seed: int = 0
    entropy_log_base: float = 2.0
    entropy_bucket_counts: bool = True
    quality_h_max: float = 2.0
    quality_w_entropy: float = 0.5
    quality_w_confidence: float = 0.5
    sampling_high_threshold: float = 0.6
    sampling_medium_threshold: float = 0.4
    sampling_budget: int | None = None
    retry_attempts: int = 3
    retry_backoff_base: float = 1.0
    rate_limit_per_sec: float = 1.0
    mock_strict_size: bool = False

    def __post_init__(self) -> None:
        for name, registry in (("country", self.countries), ("concept", self.concepts),
                               ("model", self.models), ("coder", self.coders)):
            if not registry:
                raise ConfigError(f"{name} registry is empty")
            seen: set[str] = set()
            for entry in registry:
                if entry.id in seen:
                    raise ConfigError(f"duplicate {name} id {entry.id!r}")
                seen.add(entry.id)
        if not (0 <= self.sampling_medium_threshold < self.sampling_high_threshold):
            raise ConfigError("sampling thresholds must satisfy 0 <= medium < high")

    def country(self, cid: str) -> Country:
        for c in self.countries:
            if c.id == cid:
                return c
        raise LookupError_(f"unknown country id {cid!r}")

    def concept(self, cid: str) -> Concept:
        for c in self.concepts:
            if c.id == cid:
                return c
        raise LookupError_(f"unknown concept id {cid!r}")

    def model(self, mid: str) -> ModelSpec:
        for m in self.models:
            if m.id == mid:
                return m
        raise LookupError_(f"unknown model id {mid!r}")

    def canonical_dict(self) -> dict:
        """JSON-stable representation; hashed into the store manifest."""
        return {
            "countries": [vars(c) | {} for c in self.countries],
            "concepts": [vars(c) | {} for c in self.concepts],
            "models": [dict(vars(m), endpoint_config=dict(m.endpoint_config)) for m in self.models],
            "coders": [vars(c) | {} for c in self.coders],
            "image_size": self.image_size,
            "prompt_template_version": self.prompt_template_version,
            "seed": self.seed,
            "entropy": {"log_base": self.entropy_log_base, "bucket_counts": self.entropy_bucket_counts},
            "quality": {
                "h_max": self.quality_h_max,
                "w_entropy": self.quality_w_entropy,
                "w_confidence": self.quality_w_confidence,
            },
            "sampling": {
                "high_threshold": self.sampling_high_threshold,
                "medium_threshold": self.sampling_medium_threshold,
                "budget": self.sampling_budget,
            },
            "retry": {"attempts": self.retry_attempts, "backoff_base": self.retry_backoff_base},
            "rate_limit_per_sec": self.rate_limit_per_sec,
            "mock_strict_size": self.mock_strict_size,
        }


StudyDesign = tuple[StudyCell, ...]


def load_config(path: str | Path | None = None) -> StudyConfig:
    """Load a study config JSON document; None loads the packaged default."""
    if path is None:
        raw = (resources.files("t2i_audit") / "data" / "default_config.json").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    doc = json.loads(raw)
    return config_from_dict(doc)


def config_from_dict(doc: Mapping) -> StudyConfig:
    entropy = doc.get("entropy", {})
    quality = doc.get("quality", {})
    sampling = doc.get("sampling", {})
    retry = doc.get("retry", {})
    return StudyConfig(
        countries=tuple(Country(**c) for c in doc["countries"]),
        concepts=tuple(Concept(**c) for c in doc["concepts"]),
        models=tuple(ModelSpec(**m) for m in doc["models"]),
        coders=tuple(VlmCoderSpec(**c) for c in doc["coders"]),
        image_size=int(doc.get("image_size", 1024)),
        prompt_template_version=doc.get("prompt_template_version", "v1"),
        seed=int(doc.get("seed", 0)),
        entropy_log_base=float(entropy.get("log_base", 2.0)),
        entropy_bucket_counts=bool(entropy.get("bucket_counts", True)),
        quality_h_max=float(quality.get("h_max", 2.0)),
        quality_w_entropy=float(quality.get("w_entropy", 0.5)),
        quality_w_confidence=float(quality.get("w_confidence", 0.5)),
        sampling_high_threshold=float(sampling.get("high_threshold", 0.6)),
        sampling_medium_threshold=float(sampling.get("medium_threshold", 0.4)),
        sampling_budget=sampling.get("budget"),
        retry_attempts=int(retry.get("attempts", 3)),
        retry_backoff_base=float(retry.get("backoff_base", 1.0)),
        rate_limit_per_sec=float(doc.get("rate_limit_per_sec", 1.0)),
        mock_strict_size=bool(doc.get("mock_strict_size", False)),
    )


def build_design(config: StudyConfig) -> StudyDesign:
    """Cross the registries into the ordered cell list.

    Order is country-major, then concept, then model, following registry
    order, so identical configs always produce identical designs.
    """
    cells = []
    for country in config.countries:
        for concept in config.concepts:
            for model in config.models:
                cells.append(StudyCell(
                    country=country.id,
                    concept=concept.id,
                    model=model.id,
                    cell_id=StudyCell.make_id(country.id, concept.id, model.id),
                ))
    ids = [c.cell_id for c in cells]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise ConfigError(f"duplicate cell id {dup!r} (registry ids collide after slugging)")
    return tuple(cells)


def build_prompt(cell: StudyCell, config: StudyConfig) -> str:
    """Neutral generation prompt for one cell.

    Demographic and cultural-artifact concepts render as
    "<concept> in <country>"; the national-identity concept renders as the
    bare country name (the template reads ungrammatically for it).
    """
    country = config.country(cell.country)
    concept = config.concept(cell.concept)
    if concept.category == CONCEPT_NATIONAL_IDENTITY:
        return country.display_name
    return f"{concept.display_name} in {country.display_name}"


def group_cells(design: Iterable[StudyCell], grouping: str,
                config: StudyConfig) -> dict[str, list[StudyCell]]:
    """Partition the design for one of the supported analysis groupings.

    The partition is exhaustive and disjoint: every cell lands in exactly
    one group.
    """
    cells = list(design)
    if not cells:
        raise ConfigError("cannot group an empty design")
    groups: dict[str, list[StudyCell]] = {}

    def put(key: str, cell: StudyCell) -> None:
        groups.setdefault(key, []).append(cell)

    if grouping == "west_east":
        for cell in cells:
            put(config.country(cell.country).region, cell)
    elif grouping == "english_core_vs_rest":
        for cell in cells:
            put("core" if config.country(cell.country).english_core else "rest", cell)
    elif grouping == "by_country":
        for cell in cells:
            put(cell.country, cell)
    elif grouping == "by_concept":
        for cell in cells:
            put(cell.concept, cell)
    elif grouping == "by_model":
        for cell in cells:
            put(cell.model, cell)
    else:
        raise ConfigError(f"unknown grouping {grouping!r}; expected one of {GROUPINGS}")
    return groups
