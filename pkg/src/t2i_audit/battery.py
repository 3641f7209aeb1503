"""The full analysis recipe over a completed study.

Country-level pooled t-tests (each country's images aggregated to one
mean, so 5 West vs 7 East gives df = 10) for symbol counts, flag
prominence, modernity and the four indices; the English-core (USA+UK)
versus rest contrast; an image-level chi-square on sovereignty presence;
image-level region x gender ANOVAs for cultural symbols and modernity;
image-level festival contrasts; a balanced mixed ANOVA of model (fixed)
by country (random) with concepts as replicates; Tukey HSD across models;
and per-concept East-West index contrasts. Emits one StatResult per row,
keyed by content.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import REGION_EAST, REGION_WEST, StudyConfig, StudyDesign
from .indices import GroupIndexStats, IndexRecord, aggregate_indices
from .quality import ConsensusRecord
from .stats import (Sample, StatResult, TukeyComparison, chi_square_2x2,
                    mixed_anova_balanced, student_t, tukey_hsd,
                    two_way_anova, UNIT_COUNTRY_MEAN)

COUNTRY_LEVEL_VARIABLES = (
    "political_symbols", "cultural_symbols", "flag_appearance",
    "si", "psi", "cei", "voi", "modernity", "modernity_normalized",
)

GENDER_CONCEPTS = ("women", "men")


class IncompleteStoreError(RuntimeError):
    def __init__(self, missing: list[str]):
        preview = ", ".join(missing[:8]) + ("..." if len(missing) > 8 else "")
        super().__init__(f"{len(missing)} cells missing from stores: {preview}")
        self.missing = missing


@dataclass(frozen=True)
class ConceptContrast:
    concept: str
    west_mean: float
    west_sd: float | None
    east_mean: float
    east_sd: float | None
    difference: float
    cohens_d: float
    t: float
    df: float
    p: float


@dataclass
class AnalysisProducts:
    results: dict[str, StatResult] = field(default_factory=dict)
    tukey_si: list[TukeyComparison] = field(default_factory=list)
    country_index_stats: list[GroupIndexStats] = field(default_factory=list)
    country_symbol_means: dict[str, dict[str, float]] = field(default_factory=dict)
    country_variable_stats: list[dict] = field(default_factory=list)
    concept_contrasts: list[ConceptContrast] = field(default_factory=list)
    gender_cell_stats: list[dict] = field(default_factory=list)
    n_images: int = 0


def _image_value(cons: ConsensusRecord, idx: IndexRecord, variable: str) -> float:
    if variable in ("si", "psi", "cei", "voi"):
        return getattr(idx, variable)
    if variable == "modernity_normalized":
        return (cons.modernity - 1) / 4.0
    return float(getattr(cons, variable))


def run_hypothesis_battery(consensus_records: list[ConsensusRecord],
                      index_records: list[IndexRecord],
                      design: StudyDesign, config: StudyConfig) -> AnalysisProducts:
    cons_by_cell = {r.cell_id: r for r in consensus_records}
    idx_by_cell = {r.cell_id: r for r in index_records}
    missing = sorted(set(cons_by_cell) - set(idx_by_cell))
    if missing:
        raise IncompleteStoreError(missing)
    analyzable = sorted(cons_by_cell)
    if not analyzable:
        raise IncompleteStoreError(["<empty consensus store>"])

    cells = {c.cell_id: c for c in design if c.cell_id in cons_by_cell}
    stray = sorted(set(analyzable) - set(cells))
    if stray:
        raise IncompleteStoreError(stray)

    products = AnalysisProducts(n_images=len(analyzable))

    def value(cell_id: str, variable: str) -> float:
        return _image_value(cons_by_cell[cell_id], idx_by_cell[cell_id], variable)

    # country-level means for every variable
    by_country: dict[str, list[str]] = {}
    for cell_id, cell in cells.items():
        by_country.setdefault(cell.country, []).append(cell_id)
    country_means = {
        country: {v: float(np.mean([value(c, v) for c in ids]))
                  for v in COUNTRY_LEVEL_VARIABLES}
        for country, ids in by_country.items()
    }
    products.country_symbol_means = country_means
    for country in sorted(by_country):
        ids = by_country[country]
        region = config.country(country).region
        for variable in COUNTRY_LEVEL_VARIABLES:
            arr = np.asarray([value(c, variable) for c in ids], dtype=float)
            products.country_variable_stats.append({
                "country": country, "region": region, "variable": variable,
                "n": len(ids), "mean": float(arr.mean()),
                "sd": float(arr.std(ddof=1)) if len(ids) > 1 else None,
            })

    def country_sample(label: str, countries: list[str], variable: str) -> Sample:
        return Sample(label, [country_means[c][variable] for c in countries],
                      unit=UNIT_COUNTRY_MEAN)

    west = [c.id for c in config.countries if c.region == REGION_WEST and c.id in by_country]
    east = [c.id for c in config.countries if c.region == REGION_EAST and c.id in by_country]
    core = [c.id for c in config.countries if c.english_core and c.id in by_country]
    rest = [c.id for c in config.countries if not c.english_core and c.id in by_country]

    for variable in COUNTRY_LEVEL_VARIABLES:
        a = country_sample("West", west, variable)
        b = country_sample("East", east, variable)
        products.results[f"west_east_{variable}"] = student_t(a, b)

    for variable in ("political_symbols", "flag_appearance"):
        a = country_sample("English core", core, variable)
        b = country_sample("Rest", rest, variable)
        products.results[f"english_core_{variable}"] = student_t(a, b)

    # image-level sovereignty chi-square: region x sovereignty presence
    west_cells = [cid for cid, cell in cells.items()
                  if config.country(cell.country).region == REGION_WEST]
    east_cells = [cid for cid, cell in cells.items()
                  if config.country(cell.country).region == REGION_EAST]
    table = [
        [sum(cons_by_cell[c].sovereignty for c in west_cells),
         sum(1 - cons_by_cell[c].sovereignty for c in west_cells)],
        [sum(cons_by_cell[c].sovereignty for c in east_cells),
         sum(1 - cons_by_cell[c].sovereignty for c in east_cells)],
    ]
    products.results["sovereignty_chi2"] = chi_square_2x2(table)

    # gender intersection: region x gender ANOVA at image level
    gender_cells = [(cid, cell) for cid, cell in cells.items()
                    if cell.concept in GENDER_CONCEPTS]
    if gender_cells:
        regions = [config.country(cell.country).region for _, cell in gender_cells]
        genders = [cell.concept for _, cell in gender_cells]
        for variable in ("cultural_symbols", "modernity"):
            vals = [value(cid, variable) for cid, _ in gender_cells]
            anova = two_way_anova(vals, regions, genders, names=("region", "gender"))
            inter = anova.row("regionxgender")
            products.results[f"gender_interaction_{variable}"] = StatResult(
                "two_way_anova_interaction",
                inter.f if inter.f is not None else float("nan"),
                (inter.df, anova.row("residual").df),
                inter.p if inter.p is not None else float("nan"),
                "partial_eta_sq",
                inter.partial_eta_sq if inter.partial_eta_sq is not None else float("nan"),
                extra={"anova": anova},
            )
        for variable in ("cultural_symbols", "modernity"):
            for region in (REGION_WEST, REGION_EAST):
                for gender in GENDER_CONCEPTS:
                    member_vals = [value(cid, variable) for (cid, cell) in gender_cells
                                   if config.country(cell.country).region == region
                                   and cell.concept == gender]
                    if member_vals:
                        arr = np.asarray(member_vals)
                        products.gender_cell_stats.append({
                            "variable": variable, "region": region, "gender": gender,
                            "n": len(member_vals), "mean": float(arr.mean()),
                            "sd": float(arr.std(ddof=1)) if len(member_vals) > 1 else None,
                        })

    # festivals: image-level East-West contrasts
    festival_cells = [(cid, cell) for cid, cell in cells.items() if cell.concept == "festivals"]
    if festival_cells:
        for variable in ("political_symbols", "cultural_symbols", "modernity"):
            w = Sample("West festivals",
                       [value(cid, variable) for cid, cell in festival_cells
                        if config.country(cell.country).region == REGION_WEST])
            e = Sample("East festivals",
                       [value(cid, variable) for cid, cell in festival_cells
                        if config.country(cell.country).region == REGION_EAST])
            products.results[f"festival_{variable}"] = student_t(w, e)

    # model effects: balanced mixed ANOVA + Tukey across models
    complete = _balanced_model_layout(cells, cons_by_cell, config)
    if complete:
        for variable in ("political_symbols", "cultural_symbols", "si"):
            vals = [value(cid, variable) for cid in analyzable]
            models = [cells[cid].model for cid in analyzable]
            countries = [cells[cid].country for cid in analyzable]
            anova = mixed_anova_balanced(vals, models, countries,
                                         names=("model", "country"))
            fixed = anova.row("model")
            products.results[f"model_mixed_{variable}"] = StatResult(
                "mixed_anova_fixed",
                fixed.f if fixed.f is not None else float("nan"),
                (fixed.df, anova.row("modelxcountry").df),
                fixed.p if fixed.p is not None else float("nan"),
                "partial_eta_sq",
                fixed.partial_eta_sq if fixed.partial_eta_sq is not None else float("nan"),
                extra={"anova": anova},
            )
        model_groups = [Sample(model.id,
                               [value(cid, "si") for cid in analyzable
                                if cells[cid].model == model.id])
                        for model in config.models]
        products.tukey_si = tukey_hsd(model_groups)

    # per-concept East-West VOI contrasts (image level)
    for concept in config.concepts:
        concept_cells = [(cid, cell) for cid, cell in cells.items()
                         if cell.concept == concept.id]
        if not concept_cells:
            continue
        w_vals = [value(cid, "voi") for cid, cell in concept_cells
                  if config.country(cell.country).region == REGION_WEST]
        e_vals = [value(cid, "voi") for cid, cell in concept_cells
                  if config.country(cell.country).region == REGION_EAST]
        if len(w_vals) < 2 or len(e_vals) < 2:
            continue
        w, e = Sample("West", w_vals), Sample("East", e_vals)
        res = student_t(w, e)
        products.concept_contrasts.append(ConceptContrast(
            concept=concept.id,
            west_mean=w.mean, west_sd=w.sd, east_mean=e.mean, east_sd=e.sd,
            difference=w.mean - e.mean,
            cohens_d=res.effect_size, t=res.statistic, df=res.df, p=res.p_value,
        ))
    products.concept_contrasts.sort(key=lambda c: (-c.difference, c.concept))

    # country index profile for the ranked report table
    grouping = {country: ids for country, ids in by_country.items()}
    products.country_index_stats = aggregate_indices(index_records, grouping)

    return products


def _balanced_model_layout(cells: dict, cons_by_cell: dict, config: StudyConfig) -> bool:
    counts: dict[tuple[str, str], int] = {}
    for cell in cells.values():
        counts[(cell.model, cell.country)] = counts.get((cell.model, cell.country), 0) + 1
    want = {(m.id, c.id) for m in config.models for c in config.countries}
    if set(counts) != want:
        return False
    return len(set(counts.values())) == 1


def english_core_exceeds_west_east(products: AnalysisProducts) -> bool:
    """The study's boundary-shift signature: the English-core political
    contrast is stronger than the plain West-East one."""
    core = products.results["english_core_political_symbols"].statistic
    west_east = products.results["west_east_political_symbols"].statistic
    return core > west_east


def direction_signature(products: AnalysisProducts) -> dict[str, bool]:
    """Sign checks on the five primary country-level contrasts
    (positive = West higher)."""
    res = products.results
    return {
        "political_positive": res["west_east_political_symbols"].statistic > 0,
        "cultural_negative": res["west_east_cultural_symbols"].statistic < 0,
        "flag_positive": res["west_east_flag_appearance"].statistic > 0,
        "si_positive": res["west_east_si"].statistic > 0,
        "modernity_positive": res["west_east_modernity"].statistic > 0,
    }
