"""Five-dimension coding scheme, prompt versioning, and output parsing.

The scheme measures each image on: political symbol count, cultural symbol
count, flag prominence (0-4), sovereignty presence (0/1) and modernity
(1-5). Coder output is expected to contain one JSON object; parsing
tolerates surrounding prose and markdown fences, validates every code
against the scheme bounds, and never clamps: out-of-range output is
rejected so the ensemble layer can re-prompt once and otherwise record an
invalid coding.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from importlib import resources

from .design import VlmCoderSpec
from .providers import ImageRecord, ProviderError, ProviderGateway, RawCoderOutput
from .store import CODING_LOG, StudyStore

KIND_COUNT = "count"
KIND_ORDINAL = "ordinal"
KIND_BINARY = "binary"

LEVEL_INTERVAL = "interval"
LEVEL_ORDINAL = "ordinal"
LEVEL_NOMINAL = "nominal"

DEFAULT_VLM_CONFIDENCE = 0.5   # maximal uncertainty when a coder omits the field
DEFAULT_HUMAN_CONFIDENCE = 1.0


class ParseError(ValueError):
    """No JSON object could be extracted from the raw coder output."""


class ValidationError(ValueError):
    def __init__(self, dimensions: list[str], message: str):
        super().__init__(message)
        self.dimensions = dimensions


class UncodableImageError(RuntimeError):
    """No coder produced a valid record for this image."""


@dataclass(frozen=True)
class DimensionSpec:
    id: str
    kind: str
    min: int
    max: int | None            # None = unbounded above
    measurement_level: str
    label: str = ""
    level_descriptions: dict[str, str] = field(default_factory=dict)

    def in_range(self, value: int) -> bool:
        if value < self.min:
            return False
        return self.max is None or value <= self.max


@dataclass(frozen=True)
class CodingScheme:
    dimensions: tuple[DimensionSpec, ...]
    version: str = "v1"

    def dimension(self, dim_id: str) -> DimensionSpec:
        for d in self.dimensions:
            if d.id == dim_id:
                return d
        raise KeyError(f"unknown dimension {dim_id!r}")

    @property
    def dimension_ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.dimensions)


def default_scheme() -> CodingScheme:
    return CodingScheme(dimensions=(
        DimensionSpec("political_symbols", KIND_COUNT, 0, None, LEVEL_INTERVAL,
                      label="Political symbols (count)",
                      level_descriptions={"rule": "Count each visible instance separately. "
                                                  "If you see 3 flags, count 3 (not 1)."}),
        DimensionSpec("cultural_symbols", KIND_COUNT, 0, None, LEVEL_INTERVAL,
                      label="Cultural symbols (count)",
                      level_descriptions={"rule": "Count each visible instance separately. "
                                                  "If you see 5 red lanterns, count 5 (not 1)."}),
        DimensionSpec("flag_appearance", KIND_ORDINAL, 0, 4, LEVEL_ORDINAL,
                      label="Flag appearance (0-4)",
                      level_descriptions={
                          "0": "No flag visible",
                          "1": "Flag pattern as small decorative element",
                          "2": "Flag clearly visible but not prominent",
                          "3": "Flag prominent as major visual element or background",
                          "4": "Flag as central focus dominating the image",
                      }),
        DimensionSpec("sovereignty", KIND_BINARY, 0, 1, LEVEL_NOMINAL,
                      label="Sovereignty representation (0/1)",
                      level_descriptions={
                          "0": "No sovereignty representation",
                          "1": "Sovereignty representation present",
                      }),
        DimensionSpec("modernity", KIND_ORDINAL, 1, 5, LEVEL_ORDINAL,
                      label="Modernity level (1-5)",
                      level_descriptions={
                          "1": "Fully traditional",
                          "2": "Mostly traditional",
                          "3": "Mixed traditional and modern",
                          "4": "Mostly modern",
                          "5": "Fully modern",
                      }),
    ))


@dataclass(frozen=True)
class CodingRecord:
    cell_id: str
    coder_id: str
    coder_kind: str                      # "vlm" | "human"
    political_symbols: int
    cultural_symbols: int
    flag_appearance: int
    sovereignty: int
    modernity: int
    confidence: float
    prompt_version: str
    valid: bool
    political_symbols_list: tuple[str, ...] = ()
    cultural_symbols_list: tuple[str, ...] = ()
    reasoning: str = ""
    note: str = ""

    def code(self, dim_id: str) -> int:
        return getattr(self, dim_id)

    def codes(self) -> dict[str, int]:
        return {d: getattr(self, d) for d in
                ("political_symbols", "cultural_symbols", "flag_appearance",
                 "sovereignty", "modernity")}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["political_symbols_list"] = list(self.political_symbols_list)
        d["cultural_symbols_list"] = list(self.cultural_symbols_list)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CodingRecord":
        kwargs = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        kwargs["political_symbols_list"] = tuple(kwargs.get("political_symbols_list", ()))
        kwargs["cultural_symbols_list"] = tuple(kwargs.get("cultural_symbols_list", ()))
        return cls(**kwargs)


def packaged_prompt_text(version: str = "v1") -> str:
    path = resources.files("t2i_audit") / "data" / "prompts" / f"{version}.txt"
    try:
        return path.read_text("utf-8")
    except FileNotFoundError:
        raise KeyError(f"no packaged prompt version {version!r}") from None


def render_coding_prompt(scheme: CodingScheme, version: str, store: StudyStore | None = None) -> str:
    """Byte-stable prompt text for a registered version.

    The store-backed registry wins when present (refined versions are
    registered there); the packaged default covers fresh setups. The text
    must mention every scheme dimension, which guards against pairing a
    prompt with a scheme it was not written for.
    """
    if store is not None and version in store.prompt_versions():
        text = store.prompt_version_text(version)
    else:
        text = packaged_prompt_text(version)
    missing = [d for d in scheme.dimension_ids if d not in text]
    if missing:
        raise ValidationError(missing, f"prompt version {version!r} does not cover dimensions {missing}")
    return text


def extract_json_object(raw_text: str) -> dict:
    """First JSON object in the text, tolerating prose and code fences."""
    decoder = json.JSONDecoder()
    idx = raw_text.find("{")
    while idx != -1:
        try:
            obj, _end = decoder.raw_decode(raw_text, idx)
        except json.JSONDecodeError:
            idx = raw_text.find("{", idx + 1)
            continue
        if isinstance(obj, dict):
            return obj
        idx = raw_text.find("{", idx + 1)
    raise ParseError("no JSON object found in coder output")


def _as_code(value: object, dim: DimensionSpec) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError([dim.id], f"{dim.id}: expected a number, got {value!r}")
    if isinstance(value, float) and not value.is_integer():
        raise ValidationError([dim.id], f"{dim.id}: expected an integer, got {value!r}")
    return int(value)


def parse_coder_output(raw: RawCoderOutput, scheme: CodingScheme,
                       coder_kind: str = "vlm", prompt_version: str = "v1") -> CodingRecord:
    """Parse and validate one raw output into a valid CodingRecord.

    Raises ParseError when no JSON object is present and ValidationError
    (naming the offending dimensions) when codes are missing or out of
    range; the caller owns the re-prompt-once policy.
    """
    if not raw.raw_text.strip():
        raise ParseError("empty coder output")
    doc = extract_json_object(raw.raw_text)

    bad: list[str] = []
    codes: dict[str, int] = {}
    for dim in scheme.dimensions:
        if dim.id not in doc:
            bad.append(dim.id)
            continue
        value = _as_code(doc[dim.id], dim)
        if not dim.in_range(value):
            bad.append(dim.id)
            continue
        codes[dim.id] = value
    if bad:
        raise ValidationError(bad, f"codes missing or out of range for: {', '.join(bad)}")

    conf = doc.get("confidence")
    if conf is None:
        confidence = DEFAULT_HUMAN_CONFIDENCE if coder_kind == "human" else DEFAULT_VLM_CONFIDENCE
    else:
        confidence = float(conf)
        if not 0.0 <= confidence <= 1.0:
            raise ValidationError(["confidence"], f"confidence {confidence} outside [0, 1]")

    return CodingRecord(
        cell_id=raw.cell_id,
        coder_id=raw.coder_id,
        coder_kind=coder_kind,
        confidence=confidence,
        prompt_version=prompt_version,
        valid=True,
        political_symbols_list=tuple(str(s) for s in doc.get("political_symbols_list", ())),
        cultural_symbols_list=tuple(str(s) for s in doc.get("cultural_symbols_list", ())),
        reasoning=str(doc.get("reasoning", "")),
        **codes,
    )


def _invalid_record(raw: RawCoderOutput, prompt_version: str, reason: str) -> CodingRecord:
    return CodingRecord(
        cell_id=raw.cell_id, coder_id=raw.coder_id, coder_kind="vlm",
        political_symbols=0, cultural_symbols=0, flag_appearance=0,
        sovereignty=0, modernity=1, confidence=0.0,
        prompt_version=prompt_version, valid=False, note=reason,
    )


def code_with_ensemble(gateway: ProviderGateway, image: ImageRecord,
                       coders: list[VlmCoderSpec], scheme: CodingScheme,
                       version: str) -> list[CodingRecord]:
    """Run every ensemble coder on one image, re-prompting once on bad output.

    Returns one record per coder (valid or invalid) after appending them to
    the store. Raises UncodableImageError - and writes an audit entry - if
    no coder produced a valid record, which excludes the image from
    analysis and routes it to human validation.
    """
    if len(coders) < 2:
        raise ValueError("ensemble coding requires at least 2 coders")
    prompt_text = render_coding_prompt(scheme, version, gateway.store)
    records: list[CodingRecord] = []
    for coder in coders:
        record: CodingRecord | None = None
        last_reason = ""
        for _try in range(2):   # initial attempt + one re-prompt
            try:
                raw = gateway.code_image(image, coder, prompt_text)
            except ProviderError as exc:
                last_reason = f"provider failure: {exc}"
                break
            try:
                record = parse_coder_output(raw, scheme, coder_kind="vlm", prompt_version=version)
                break
            except (ParseError, ValidationError) as exc:
                last_reason = str(exc)
        if record is None:
            record = _invalid_record(
                RawCoderOutput(cell_id=image.cell_id, coder_id=coder.id, raw_text=""),
                version, last_reason)
        records.append(record)
    gateway.store.append_many(CODING_LOG, [r.to_dict() for r in records])
    if not any(r.valid for r in records):
        gateway.store.audit("uncodable_image", cell_id=image.cell_id,
                            coders=[c.id for c in coders])
        raise UncodableImageError(f"no valid coder output for {image.cell_id}")
    return records


def validate_human_codes(codes: dict[str, int], scheme: CodingScheme) -> list[str]:
    """Return the dimensions that are missing or out of range (empty = ok)."""
    bad = []
    for dim in scheme.dimensions:
        value = codes.get(dim.id)
        if value is None or not isinstance(value, int) or isinstance(value, bool) \
                or not dim.in_range(value):
            bad.append(dim.id)
    return bad
