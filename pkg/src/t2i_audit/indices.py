"""Composite representation indices and their aggregation.

Per image: a symbolization index SI = (P - C)/(P + C + 1) balancing
political against cultural symbol counts; a political-sovereignty index
PSI blending flag prominence (40%), sovereignty (30%) and normalized
political count (30%); a cultural-exoticization index CEI blending
normalized cultural count (40%), traditionality (30%) and flag absence
(30%); and their difference VOI = PSI - CEI, the study's headline measure
(positive = political-representation dominance).

Count normalization uses corpus-wide maxima over the consensus codes of
the current run, recorded on every index record for auditability.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Iterable, Mapping, Sequence

import numpy as np

from .quality import ConsensusRecord

PSI_W_FLAG = 0.4
PSI_W_SOVEREIGNTY = 0.3
PSI_W_POLITICAL = 0.3
CEI_W_CULTURAL = 0.4
CEI_W_TRADITIONALITY = 0.3
CEI_W_FLAG_ABSENCE = 0.3

FLAG_SCALE_MAX = 4
MODERNITY_SCALE_MAX = 5


class NormalizationError(ValueError):
    """Index normalization is undefined (zero corpus maximum or stale context)."""


@dataclass(frozen=True)
class NormalizationContext:
    max_political: int
    max_cultural: int
    scope_descriptor: str = "corpus"

    def __post_init__(self) -> None:
        if self.max_political < 1 or self.max_cultural < 1:
            raise NormalizationError(
                "corpus maxima must be >= 1; a zero maximum leaves the index undefined")

    @classmethod
    def from_consensus(cls, records: Iterable[ConsensusRecord],
                       scope_descriptor: str = "corpus") -> "NormalizationContext":
        recs = list(records)
        if not recs:
            raise NormalizationError("no consensus records to normalize over")
        return cls(max_political=max(r.political_symbols for r in recs),
                   max_cultural=max(r.cultural_symbols for r in recs),
                   scope_descriptor=scope_descriptor)


@dataclass(frozen=True)
class IndexRecord:
    cell_id: str
    si: float
    psi: float
    cei: float
    voi: float
    max_political: int
    max_cultural: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "IndexRecord":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def symbolization_index(political: int, cultural: int) -> float:
    """(P - C) / (P + C + 1); the +1 removes the 0/0 case and keeps |SI| < 1."""
    if political < 0 or cultural < 0:
        raise ValueError("counts must be >= 0")
    return (political - cultural) / (political + cultural + 1)


def psi(flag: int, sovereignty: int, political: int, ctx: NormalizationContext) -> float:
    if not 0 <= flag <= FLAG_SCALE_MAX:
        raise ValueError(f"flag must be 0..{FLAG_SCALE_MAX}")
    if sovereignty not in (0, 1):
        raise ValueError("sovereignty must be 0 or 1")
    if political < 0:
        raise ValueError("political count must be >= 0")
    if political > ctx.max_political:
        raise NormalizationError(
            f"political count {political} exceeds corpus max {ctx.max_political}; "
            "normalization context is stale")
    return (PSI_W_FLAG * flag / FLAG_SCALE_MAX
            + PSI_W_SOVEREIGNTY * sovereignty
            + PSI_W_POLITICAL * political / ctx.max_political)


def cei(cultural: int, modernity: int, flag: int, ctx: NormalizationContext) -> float:
    if not 1 <= modernity <= MODERNITY_SCALE_MAX:
        raise ValueError(f"modernity must be 1..{MODERNITY_SCALE_MAX}")
    if not 0 <= flag <= FLAG_SCALE_MAX:
        raise ValueError(f"flag must be 0..{FLAG_SCALE_MAX}")
    if cultural < 0:
        raise ValueError("cultural count must be >= 0")
    if cultural > ctx.max_cultural:
        raise NormalizationError(
            f"cultural count {cultural} exceeds corpus max {ctx.max_cultural}; "
            "normalization context is stale")
    return (CEI_W_CULTURAL * cultural / ctx.max_cultural
            + CEI_W_TRADITIONALITY * (1.0 - modernity / MODERNITY_SCALE_MAX)
            + CEI_W_FLAG_ABSENCE * (1.0 - flag / FLAG_SCALE_MAX))


def voi(psi_value: float, cei_value: float) -> float:
    """Exact difference PSI - CEI."""
    if not (0.0 <= psi_value <= 1.0 and 0.0 <= cei_value <= 1.0):
        raise ValueError("psi and cei must be in [0, 1]")
    return psi_value - cei_value


def compute_indices(records: Iterable[ConsensusRecord],
                    ctx: NormalizationContext | None = None) -> list[IndexRecord]:
    """Per-image indices over a consensus store (single pass for the maxima)."""
    recs = sorted(records, key=lambda r: r.cell_id)
    if ctx is None:
        ctx = NormalizationContext.from_consensus(recs)
    out = []
    for r in recs:
        p = psi(r.flag_appearance, r.sovereignty, r.political_symbols, ctx)
        c = cei(r.cultural_symbols, r.modernity, r.flag_appearance, ctx)
        out.append(IndexRecord(
            cell_id=r.cell_id,
            si=symbolization_index(r.political_symbols, r.cultural_symbols),
            psi=p, cei=c, voi=voi(p, c),
            max_political=ctx.max_political,
            max_cultural=ctx.max_cultural,
        ))
    return out


@dataclass(frozen=True)
class GroupIndexStats:
    group: str
    n: int
    si_mean: float
    si_sd: float | None
    psi_mean: float
    psi_sd: float | None
    cei_mean: float
    cei_sd: float | None
    voi_mean: float
    voi_sd: float | None


def _mean_sd(values: Sequence[float]) -> tuple[float, float | None]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1)) if arr.size >= 2 else None
    return mean, sd


def aggregate_indices(records: Iterable[IndexRecord],
                      grouping: Mapping[str, Sequence[str]]) -> list[GroupIndexStats]:
    """Mean/SD per group for each index, ranked descending by mean VOI
    (group label breaks ties). grouping maps group label -> cell_ids."""
    by_cell = {r.cell_id: r for r in records}
    out = []
    for label, cell_ids in grouping.items():
        members = [by_cell[c] for c in cell_ids if c in by_cell]
        if not members:
            raise ValueError(f"group {label!r} has no index records")
        si_m, si_s = _mean_sd([m.si for m in members])
        psi_m, psi_s = _mean_sd([m.psi for m in members])
        cei_m, cei_s = _mean_sd([m.cei for m in members])
        voi_m, voi_s = _mean_sd([m.voi for m in members])
        out.append(GroupIndexStats(label, len(members), si_m, si_s, psi_m, psi_s,
                                   cei_m, cei_s, voi_m, voi_s))
    out.sort(key=lambda g: (-g.voi_mean, g.group))
    return out
