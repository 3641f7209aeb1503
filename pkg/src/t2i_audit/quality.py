"""Ensemble aggregation and quality signals.

Consensus collapses the coder ensemble to one code per dimension with
robust median/majority rules. External entropy measures cross-coder
disagreement per image (0 = unanimity); the quality score folds entropy
and mean coder confidence into a 0-100 signal; and the prioritizer turns
entropy into a human-validation queue, highest-disagreement first.

All functions are pure over immutable record lists and invariant to coder
order.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, asdict
from typing import Iterable, Sequence

from .coding import (KIND_BINARY, KIND_COUNT, KIND_ORDINAL, CodingRecord,
                     CodingScheme, default_scheme)

# Quality-score constants, kept together so replicators can swap weights.
H_MAX_BITS = 2.0          # 4-coder per-dimension entropy ceiling (base 2, bucketed counts)
W_ENTROPY = 0.5
W_CONFIDENCE = 0.5

COUNT_BUCKET_CAP = 4      # count values >= 4 share one entropy bucket

PRIORITY_HIGH = "high"
PRIORITY_MEDIUM = "medium"
PRIORITY_LOW = "low"


class InsufficientEnsembleError(ValueError):
    """Fewer than 2 valid coder records; image must go to human validation."""


@dataclass(frozen=True)
class ConsensusRecord:
    cell_id: str
    political_symbols: int
    cultural_symbols: int
    flag_appearance: int
    sovereignty: int
    modernity: int
    h_ext: float
    mean_confidence: float
    quality_score: float
    n_valid_coders: int
    tie_broken: bool

    def code(self, dim_id: str) -> int:
        return getattr(self, dim_id)

    def codes(self) -> dict[str, int]:
        return {d: getattr(self, d) for d in
                ("political_symbols", "cultural_symbols", "flag_appearance",
                 "sovereignty", "modernity")}

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ConsensusRecord":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class ValidationQueueEntry:
    cell_id: str
    h_ext: float
    priority: str
    assigned_coders: tuple[str, ...] = ()
    status: str = "pending"     # pending | partially_coded | complete

    def to_dict(self) -> dict:
        d = asdict(self)
        d["assigned_coders"] = list(self.assigned_coders)
        return d


def _valid_sorted(records: Iterable[CodingRecord]) -> list[CodingRecord]:
    valid = sorted((r for r in records if r.valid), key=lambda r: r.coder_id)
    return valid


def _median_consensus(values: Sequence[int], halves_up: bool,
                      mode_of: Sequence[int] | None = None) -> tuple[int, bool]:
    """Median with explicit tie resolution.

    Even-length inputs whose middle pair differs are tie situations; a
    half-integer median rounds up for counts and toward the modal coder
    value for ordinals (mode ties round up). Returns (code, tie_fired).
    """
    s = sorted(values)
    n = len(s)
    if n % 2 == 1:
        return s[n // 2], False
    lo, hi = s[n // 2 - 1], s[n // 2]
    if lo == hi:
        return lo, False
    mid = (lo + hi) / 2.0
    if mid.is_integer():
        return int(mid), True
    if halves_up:
        return math.ceil(mid), True
    counts = Counter(mode_of if mode_of is not None else values)
    best = max(counts.values())
    modes = {v for v, c in counts.items() if c == best}
    down, up = math.floor(mid), math.ceil(mid)
    d_down = min((abs(down - m) for m in modes), default=0)
    d_up = min((abs(up - m) for m in modes), default=0)
    if d_down < d_up:
        return down, True
    if d_up < d_down:
        return up, True
    return up, True     # mode equidistant/tied: round up


def consensus(records: Iterable[CodingRecord], scheme: CodingScheme | None = None,
              log_base: float = 2.0, bucket_counts: bool = True,
              h_max: float = H_MAX_BITS, w_entropy: float = W_ENTROPY,
              w_confidence: float = W_CONFIDENCE) -> ConsensusRecord:
    """Aggregate one image's valid coder records into consensus codes.

    Counts take the median (halves up); ordinals take the median (halves
    toward the mode); the binary sovereignty code takes the majority, with
    2-2 ties resolved to 1 only when some coder saw a clearly visible flag
    (flag_appearance >= 2). tie_broken reports whether any rule fired.
    The entropy/quality keyword switches mirror the study config.
    """
    scheme = scheme or default_scheme()
    valid = _valid_sorted(records)
    if len(valid) < 2:
        raise InsufficientEnsembleError(
            f"need >= 2 valid coder records, got {len(valid)}")
    cell_id = valid[0].cell_id

    codes: dict[str, int] = {}
    tie_broken = False
    for dim in scheme.dimensions:
        values = [r.code(dim.id) for r in valid]
        if dim.kind == KIND_COUNT:
            code, fired = _median_consensus(values, halves_up=True)
        elif dim.kind == KIND_ORDINAL:
            code, fired = _median_consensus(values, halves_up=False, mode_of=values)
        elif dim.kind == KIND_BINARY:
            ones = sum(values)
            zeros = len(values) - ones
            if ones > zeros:
                code, fired = 1, False
            elif zeros > ones:
                code, fired = 0, False
            else:
                any_visible_flag = any(r.flag_appearance >= 2 for r in valid)
                code, fired = (1 if any_visible_flag else 0), True
        else:
            raise ValueError(f"unknown dimension kind {dim.kind!r}")
        codes[dim.id] = code
        tie_broken = tie_broken or fired

    h = external_entropy(valid, scheme, log_base=log_base, bucket_counts=bucket_counts)
    conf = sum(r.confidence for r in valid) / len(valid)
    return ConsensusRecord(
        cell_id=cell_id,
        h_ext=h,
        mean_confidence=conf,
        quality_score=quality_score(h, conf, h_max=h_max,
                                    w_entropy=w_entropy, w_confidence=w_confidence),
        n_valid_coders=len(valid),
        tie_broken=tie_broken,
        **codes,
    )


def shannon_entropy(values: Sequence[int], log_base: float = 2.0) -> float:
    counts = Counter(values)
    n = len(values)
    h = 0.0
    for c in counts.values():
        p = c / n
        h -= p * math.log(p)
    return h / math.log(log_base)


def bucket_count(value: int, cap: int = COUNT_BUCKET_CAP) -> int:
    return min(value, cap)


def external_entropy(records: Iterable[CodingRecord], scheme: CodingScheme | None = None,
                     log_base: float = 2.0, bucket_counts: bool = True) -> float:
    """Mean per-dimension Shannon entropy of the coder-value distributions.

    Count dimensions are bucketed into {0, 1, 2, 3, >=4} so their support
    is bounded; 0.0 means all valid coders agree on every dimension. The
    log base and bucketing are switchable for sensitivity runs; defaults
    are base 2 with bucketing.
    """
    scheme = scheme or default_scheme()
    valid = [r for r in records if r.valid]
    if len(valid) < 2:
        raise InsufficientEnsembleError(
            f"need >= 2 valid coder records, got {len(valid)}")
    total = 0.0
    for dim in scheme.dimensions:
        values = [r.code(dim.id) for r in valid]
        if dim.kind == KIND_COUNT and bucket_counts:
            values = [bucket_count(v) for v in values]
        total += shannon_entropy(values, log_base)
    return total / len(scheme.dimensions)


def quality_score(h_ext: float, mean_confidence: float,
                  h_max: float = H_MAX_BITS,
                  w_entropy: float = W_ENTROPY,
                  w_confidence: float = W_CONFIDENCE) -> float:
    """0-100 composite: low disagreement and high confidence score high."""
    if h_ext < 0:
        raise ValueError("h_ext must be >= 0")
    if not 0.0 <= mean_confidence <= 1.0:
        raise ValueError("mean_confidence must be in [0, 1]")
    agreement = 1.0 - min(h_ext, h_max) / h_max
    return 100.0 * (w_entropy * agreement + w_confidence * mean_confidence)


def prioritize_for_validation(consensus_records: Iterable[ConsensusRecord],
                              high_threshold: float = 0.6,
                              medium_threshold: float = 0.4,
                              budget: int | None = None,
                              forced_high: Iterable[str] = ()) -> list[ValidationQueueEntry]:
    """Entropy-prioritized validation queue.

    Strata: h_ext > high first, then medium < h_ext <= high, then the rest,
    each descending by h_ext with cell_id as the stable tie-break. forced_high
    lists cells routed to humans regardless of entropy (e.g. under-coded
    images). budget truncates; None keeps every entry above the medium
    threshold plus forced entries.
    """
    if not 0 <= medium_threshold < high_threshold:
        raise ValueError("thresholds must satisfy 0 <= medium < high")
    if budget is not None and budget < 0:
        raise ValueError("budget must be >= 0")

    forced = set(forced_high)
    entries = []
    for rec in consensus_records:
        if rec.cell_id in forced or rec.h_ext > high_threshold:
            priority = PRIORITY_HIGH
        elif rec.h_ext > medium_threshold:
            priority = PRIORITY_MEDIUM
        else:
            priority = PRIORITY_LOW
        entries.append(ValidationQueueEntry(cell_id=rec.cell_id, h_ext=rec.h_ext,
                                            priority=priority))
    for cell_id in sorted(forced - {e.cell_id for e in entries}):
        entries.append(ValidationQueueEntry(cell_id=cell_id, h_ext=0.0,
                                            priority=PRIORITY_HIGH))

    # forced cells head the high stratum so no budget can drop them
    rank = {PRIORITY_HIGH: 0, PRIORITY_MEDIUM: 1, PRIORITY_LOW: 2}
    entries.sort(key=lambda e: (rank[e.priority], e.cell_id not in forced,
                                -e.h_ext, e.cell_id))
    if budget is None:
        return [e for e in entries if e.priority != PRIORITY_LOW or e.cell_id in forced]
    return entries[:budget]
