"""Inter-coder and AI-human reliability statistics.

Krippendorff's alpha in the coincidence-matrix formulation: within each
unit, every ordered pair of values contributes 1/(m_u - 1) to the
coincidence count o[c][k]; observed disagreement weights those counts by a
difference function (nominal 0/1, ordinal squared cumulative-marginal
distance, interval squared numeric distance), expected disagreement uses
the marginals. Missing values are allowed; units with fewer than two
values are dropped with an audit note. Percent agreement and its
quality-stratified variant cover the AI-human comparisons, with a +/-1
tolerance on unbounded count dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .coding import KIND_COUNT, CodingScheme

LEVEL_NOMINAL = "nominal"
LEVEL_ORDINAL = "ordinal"
LEVEL_INTERVAL = "interval"

COUNT_AGREEMENT_TOLERANCE = 1   # |a - b| <= 1 counts as agreement on count dims


class ReliabilityError(ValueError):
    pass


@dataclass(frozen=True)
class ReliabilityMatrix:
    """units x coders grid of optional codes for one dimension."""

    units: tuple[str, ...]
    coders: tuple[str, ...]
    values: tuple[tuple[float | None, ...], ...]   # row = unit, col = coder
    measurement_level: str

    def __post_init__(self) -> None:
        if len(self.coders) < 2:
            raise ReliabilityError("need at least 2 coders")
        if self.measurement_level not in (LEVEL_NOMINAL, LEVEL_ORDINAL, LEVEL_INTERVAL):
            raise ReliabilityError(f"unknown measurement level {self.measurement_level!r}")
        if len(self.values) != len(self.units):
            raise ReliabilityError("one value row per unit required")
        for row in self.values:
            if len(row) != len(self.coders):
                raise ReliabilityError("one value per coder required in each row")

    @classmethod
    def build(cls, data: Mapping[str, Mapping[str, float | None]], coders: Sequence[str],
              measurement_level: str) -> "ReliabilityMatrix":
        units = tuple(sorted(data))
        rows = tuple(tuple(data[u].get(c) for c in coders) for u in units)
        return cls(units, tuple(coders), rows, measurement_level)

    def pairable_rows(self) -> tuple[list[list[float]], list[str]]:
        """Rows with >= 2 non-missing values, plus the dropped unit ids."""
        kept: list[list[float]] = []
        dropped: list[str] = []
        for unit, row in zip(self.units, self.values):
            present = [float(v) for v in row if v is not None]
            if len(present) >= 2:
                kept.append(present)
            else:
                dropped.append(unit)
        return kept, dropped


@dataclass(frozen=True)
class ReliabilityResult:
    alpha: float
    observed_disagreement: float
    expected_disagreement: float
    n_units: int
    n_pairable_values: int
    degenerate: bool = False
    dropped_units: tuple[str, ...] = ()


def _difference_matrix(categories: np.ndarray, marginals: np.ndarray,
                       level: str) -> np.ndarray:
    k = len(categories)
    if level == LEVEL_NOMINAL:
        return 1.0 - np.eye(k)
    if level == LEVEL_INTERVAL:
        return (categories[:, None] - categories[None, :]) ** 2
    # ordinal: squared distance between cumulative marginal positions,
    # delta(c, k) = (sum_{g=c..k} n_g - (n_c + n_k) / 2)^2 over sorted categories
    delta = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            between = marginals[i:j + 1].sum() - (marginals[i] + marginals[j]) / 2.0
            delta[i, j] = delta[j, i] = between ** 2
    return delta


def krippendorff_alpha(matrix: ReliabilityMatrix) -> ReliabilityResult:
    """alpha = 1 - Do/De from the coincidence matrix.

    Perfect agreement gives exactly 1.0. When every value in the matrix is
    identical, expected disagreement is zero and the result is pinned to
    1.0 with the degenerate flag set.
    """
    rows, dropped = matrix.pairable_rows()
    if len(rows) < 2:
        raise ReliabilityError(
            f"need >= 2 pairable units, got {len(rows)} (dropped: {dropped})")

    categories = np.array(sorted({v for row in rows for v in row}), dtype=float)
    index = {v: i for i, v in enumerate(categories)}
    k = len(categories)

    coincidence = np.zeros((k, k))
    for row in rows:
        m = len(row)
        weight = 1.0 / (m - 1)
        for i, a in enumerate(row):
            for j, b in enumerate(row):
                if i != j:
                    coincidence[index[a], index[b]] += weight
    n = coincidence.sum()
    marginals = coincidence.sum(axis=1)

    delta = _difference_matrix(categories, marginals, matrix.measurement_level)
    d_observed = float((coincidence * delta).sum()) / n
    d_expected = float((np.outer(marginals, marginals) * delta).sum()) / (n * (n - 1.0))

    n_pairable = int(round(n))
    if d_expected == 0.0:
        return ReliabilityResult(1.0, d_observed, d_expected, len(rows), n_pairable,
                                 degenerate=True, dropped_units=tuple(dropped))
    return ReliabilityResult(1.0 - d_observed / d_expected, d_observed, d_expected,
                             len(rows), n_pairable, dropped_units=tuple(dropped))


def percent_agreement(matrix: ReliabilityMatrix, count_dimension: bool = False,
                      count_tolerance: int = COUNT_AGREEMENT_TOLERANCE) -> float:
    """Fraction of units on which two coders agree.

    Exact match for binary/ordinal/nominal codes; within +/-count_tolerance
    for unbounded count dimensions (exact-count matching would make the
    statistic uninformative there).
    """
    if len(matrix.coders) != 2:
        raise ReliabilityError("percent agreement is defined for exactly 2 coders")
    pairs = [(row[0], row[1]) for row in matrix.values
             if row[0] is not None and row[1] is not None]
    if not pairs:
        raise ReliabilityError("no complete unit pairs")
    tol = count_tolerance if count_dimension else 0
    hits = sum(1 for a, b in pairs if abs(a - b) <= tol)
    return hits / len(pairs)


def stratified_agreement(matrix: ReliabilityMatrix, strata: Mapping[str, str],
                         count_dimension: bool = False) -> dict[str, float]:
    """Per-stratum percent agreement plus 'overall'; empty strata are absent."""
    missing = [u for u in matrix.units if u not in strata]
    if missing:
        raise ReliabilityError(f"strata must cover all units; missing {missing[:5]}")
    out: dict[str, float] = {"overall": percent_agreement(matrix, count_dimension)}
    for stratum in sorted(set(strata.values())):
        unit_ids = [u for u in matrix.units if strata[u] == stratum]
        rows = {u: {matrix.coders[0]: matrix.values[matrix.units.index(u)][0],
                    matrix.coders[1]: matrix.values[matrix.units.index(u)][1]}
                for u in unit_ids}
        rows = {u: v for u, v in rows.items()
                if v[matrix.coders[0]] is not None and v[matrix.coders[1]] is not None}
        if not rows:
            continue
        sub = ReliabilityMatrix.build(rows, matrix.coders, matrix.measurement_level)
        out[stratum] = percent_agreement(sub, count_dimension)
    return out


# -- wiring against the study's record stores --------------------------------------


def dimension_level(scheme: CodingScheme, dim_id: str) -> str:
    """Measurement level used for alpha: counts are interval, flag/modernity
    ordinal, sovereignty nominal."""
    return scheme.dimension(dim_id).measurement_level


def matrix_from_codes(codes_by_coder: Mapping[str, Mapping[str, int]],
                      measurement_level: str,
                      coders: Sequence[str] | None = None) -> ReliabilityMatrix:
    """codes_by_coder: coder_id -> {cell_id -> code}."""
    coders = tuple(coders if coders is not None else sorted(codes_by_coder))
    units = sorted({u for kv in codes_by_coder.values() for u in kv})
    data = {u: {c: codes_by_coder.get(c, {}).get(u) for c in coders} for u in units}
    return ReliabilityMatrix.build(data, coders, measurement_level)


@dataclass(frozen=True)
class DimensionReliability:
    dimension: str
    level: str
    result: ReliabilityResult


def ensemble_reliability(records_by_coder: Mapping[str, Mapping[str, dict]],
                         scheme: CodingScheme) -> list[DimensionReliability]:
    """Per-dimension alpha across coder columns (cross-model agreement when
    the coders are the VLM ensemble, inter-coder agreement for humans)."""
    out = []
    for dim in scheme.dimensions:
        codes = {coder: {cell: rec[dim.id] for cell, rec in cells.items()}
                 for coder, cells in records_by_coder.items()}
        matrix = matrix_from_codes(codes, dim.measurement_level)
        out.append(DimensionReliability(dim.id, dim.measurement_level,
                                        krippendorff_alpha(matrix)))
    return out


def consensus_vs_experts(consensus_codes: Mapping[str, dict],
                         expert_codes: Mapping[str, Mapping[str, dict]],
                         scheme: CodingScheme) -> dict[str, object]:
    """AI-human agreement: the ensemble consensus as one pseudo-coder against
    each expert, averaged over experts. Returns per-dimension alpha plus
    overall (all dimensions pooled as separate units) and per-dimension
    percent agreement."""
    alphas: dict[str, list[float]] = {d.id: [] for d in scheme.dimensions}
    agreements: dict[str, list[float]] = {d.id: [] for d in scheme.dimensions}
    pooled_units: dict[str, dict[str, float | None]] = {}
    experts = sorted(expert_codes)
    for expert in experts:
        cells = expert_codes[expert]
        common = sorted(set(cells) & set(consensus_codes))
        if not common:
            continue
        for dim in scheme.dimensions:
            data = {cell: {"consensus": consensus_codes[cell][dim.id],
                           expert: cells[cell][dim.id]} for cell in common}
            matrix = ReliabilityMatrix.build(data, ("consensus", expert),
                                             dim.measurement_level)
            try:
                alphas[dim.id].append(krippendorff_alpha(matrix).alpha)
            except ReliabilityError:
                pass    # alpha needs >= 2 units; early in validation that is normal
            agreements[dim.id].append(percent_agreement(
                matrix, count_dimension=scheme.dimension(dim.id).kind == KIND_COUNT))
            for cell in common:
                unit = f"{cell}::{dim.id}::{expert}"
                pooled_units[unit] = {"consensus": float(consensus_codes[cell][dim.id]),
                                      "expert": float(cells[cell][dim.id])}
    if not pooled_units:
        raise ReliabilityError("no overlap between expert codes and consensus")
    overall_matrix = ReliabilityMatrix.build(pooled_units, ("consensus", "expert"),
                                             LEVEL_INTERVAL)
    overall = krippendorff_alpha(overall_matrix)
    return {
        "per_dimension_alpha": {d: float(np.mean(v)) for d, v in alphas.items() if v},
        "per_dimension_agreement": {d: float(np.mean(v)) for d, v in agreements.items() if v},
        "overall_alpha": overall.alpha,
    }
