"""Report emitter: turns analysis products into fixed-format CSV files.

The renderer computes nothing: every numeric cell comes from a StatResult
or a precomputed aggregate. Formatting is deterministic (fixed column
order, LF endings, 3 decimals for indices and descriptives, 2 for test
statistics, 4 for p-values), so re-running over unchanged stores yields
byte-identical files. All writes are temp-file-then-rename.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .battery import AnalysisProducts
from .design import StudyConfig
from .stats import StatResult
from .store import StudyStore

TABLE2 = "table2.csv"
TABLE_S1 = "tableS1.csv"
TABLE_S2 = "tableS2.csv"
FIG_SYMBOL_SCATTER = "fig_symbol_scatter.csv"
FIG_FLAG_BARS = "fig_flag_bars.csv"
FIG_VOI_BARS = "fig_voi_bars.csv"
FIG_GENDER_BARS = "fig_gender_bars.csv"

REPORT_FILES = (TABLE2, TABLE_S1, TABLE_S2, FIG_SYMBOL_SCATTER,
                FIG_FLAG_BARS, FIG_VOI_BARS, FIG_GENDER_BARS)

# fixed row order for the hypothesis table
TABLE2_ROWS = (
    "west_east_political_symbols",
    "west_east_cultural_symbols",
    "west_east_flag_appearance",
    "west_east_si",
    "west_east_psi",
    "west_east_cei",
    "west_east_voi",
    "west_east_modernity",
    "west_east_modernity_normalized",
    "english_core_political_symbols",
    "english_core_flag_appearance",
    "sovereignty_chi2",
    "gender_interaction_cultural_symbols",
    "gender_interaction_modernity",
    "festival_political_symbols",
    "festival_cultural_symbols",
    "festival_modernity",
    "model_mixed_political_symbols",
    "model_mixed_cultural_symbols",
    "model_mixed_si",
)


class ReportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReportBundle:
    paths: dict[str, Path]

    def path(self, name: str) -> Path:
        return self.paths[name]


def _num(value: float | None, places: int) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    rounded = round(float(value), places)
    if rounded == 0.0:
        rounded = 0.0     # avoid "-0.000"
    return f"{rounded:.{places}f}"


def _idx(value: float | None) -> str:
    return _num(value, 3)


def _stat(value: float | None) -> str:
    return _num(value, 2)


def _pval(value: float | None) -> str:
    return _num(value, 4)


def _stars(p: float | None) -> str:
    if p is None or (isinstance(p, float) and math.isnan(p)):
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return "ns"


def _df_text(df) -> str:
    if isinstance(df, tuple):
        return f"{_num(df[0], 0)};{_num(df[1], 0)}"
    if float(df).is_integer():
        return _num(df, 0)
    return _stat(df)


def _csv(rows: list[list[str]]) -> str:
    def cell(c: str) -> str:
        if any(ch in c for ch in ",\"\n"):
            return '"' + c.replace('"', '""') + '"'
        return c
    return "\n".join(",".join(cell(c) for c in row) for row in rows) + "\n"


def _table2_row(key: str, res: StatResult) -> list[str]:
    desc = list(res.group_descriptives) + [None, None]
    a, b = desc[0], desc[1]

    def unpack(d) -> tuple[str, str, str, str]:
        if d is None:
            return "", "", "", ""
        label, n, mean, sd = d
        return str(label), str(n), _idx(mean), _idx(sd)

    la, na, ma, sa = unpack(a)
    lb, nb, mb, sb = unpack(b)
    hedges = res.extra.get("hedges_g")
    return [
        key, res.test_name, la, na, ma, sa, lb, nb, mb, sb,
        _stat(res.statistic), _df_text(res.df), _pval(res.p_value),
        res.effect_size_name, _idx(res.effect_size),
        _idx(hedges) if hedges is not None else "",
        _stars(res.p_value),
    ]


def emit_reports(store: StudyStore, products: AnalysisProducts,
                 config: StudyConfig) -> ReportBundle:
    """Write the report bundle into the store's reports directory."""
    if not products.results:
        raise ReportError("analysis products are empty; run the battery first")
    missing = [k for k in TABLE2_ROWS if k not in products.results]
    if missing:
        raise ReportError(f"battery is incomplete; missing rows: {', '.join(missing)}")

    paths: dict[str, Path] = {}

    header = ["row", "test", "group_a", "n_a", "mean_a", "sd_a",
              "group_b", "n_b", "mean_b", "sd_b",
              "statistic", "df", "p", "effect_size_name", "effect_size",
              "hedges_g", "significance"]
    rows = [header]
    for key in TABLE2_ROWS:
        rows.append(_table2_row(key, products.results[key]))
    for comp in products.tukey_si:
        rows.append([
            f"model_tukey_si_{comp.group_a}_vs_{comp.group_b}", "tukey_hsd",
            comp.group_a, "", "", "", comp.group_b, "", "", "",
            _stat(comp.q_statistic), "", _pval(comp.p_adjusted),
            "mean_diff", _idx(comp.mean_diff), "", _stars(comp.p_adjusted),
        ])
    paths[TABLE2] = store.write_csv(TABLE2, _csv(rows))

    region_of = {c.id: c.region for c in config.countries}
    rows = [["country", "region", "n", "voi_mean", "voi_sd", "psi_mean", "psi_sd",
             "cei_mean", "cei_sd", "si_mean", "si_sd",
             "political_mean", "cultural_mean", "flag_mean"]]
    for g in products.country_index_stats:   # already ranked by VOI descending
        means = products.country_symbol_means.get(g.group, {})
        rows.append([
            g.group, region_of.get(g.group, ""), str(g.n),
            _idx(g.voi_mean), _idx(g.voi_sd), _idx(g.psi_mean), _idx(g.psi_sd),
            _idx(g.cei_mean), _idx(g.cei_sd), _idx(g.si_mean), _idx(g.si_sd),
            _idx(means.get("political_symbols")), _idx(means.get("cultural_symbols")),
            _idx(means.get("flag_appearance")),
        ])
    paths[TABLE_S1] = store.write_csv(TABLE_S1, _csv(rows))

    rows = [["concept", "west_voi_mean", "west_voi_sd", "east_voi_mean", "east_voi_sd",
             "difference", "cohens_d", "t", "df", "p", "significance"]]
    for c in products.concept_contrasts:     # ranked by East-West difference
        rows.append([
            c.concept, _idx(c.west_mean), _idx(c.west_sd), _idx(c.east_mean),
            _idx(c.east_sd), _idx(c.difference), _stat(c.cohens_d),
            _stat(c.t), _df_text(c.df), _pval(c.p), _stars(c.p),
        ])
    paths[TABLE_S2] = store.write_csv(TABLE_S2, _csv(rows))

    stats_by = {}
    for row in products.country_variable_stats:
        stats_by[(row["country"], row["variable"])] = row

    rows = [["country", "region", "n", "political_mean", "cultural_mean"]]
    for g in products.country_index_stats:
        pol = stats_by.get((g.group, "political_symbols"))
        cul = stats_by.get((g.group, "cultural_symbols"))
        if pol and cul:
            rows.append([g.group, pol["region"], str(pol["n"]),
                         _idx(pol["mean"]), _idx(cul["mean"])])
    paths[FIG_SYMBOL_SCATTER] = store.write_csv(FIG_SYMBOL_SCATTER, _csv(rows))

    rows = [["country", "region", "n", "mean", "sd"]]
    for g in products.country_index_stats:
        flag = stats_by.get((g.group, "flag_appearance"))
        if flag:
            rows.append([g.group, flag["region"], str(flag["n"]),
                         _idx(flag["mean"]), _idx(flag["sd"])])
    paths[FIG_FLAG_BARS] = store.write_csv(FIG_FLAG_BARS, _csv(rows))

    rows = [["country", "region", "n", "mean", "sd"]]
    for g in products.country_index_stats:
        rows.append([g.group, region_of.get(g.group, ""), str(g.n),
                     _idx(g.voi_mean), _idx(g.voi_sd)])
    paths[FIG_VOI_BARS] = store.write_csv(FIG_VOI_BARS, _csv(rows))

    rows = [["variable", "region", "gender", "n", "mean", "sd"]]
    for row in products.gender_cell_stats:
        rows.append([row["variable"], row["region"], row["gender"], str(row["n"]),
                     _idx(row["mean"]), _idx(row["sd"])])
    paths[FIG_GENDER_BARS] = store.write_csv(FIG_GENDER_BARS, _csv(rows))

    return ReportBundle(paths)


def battery_csv(products: AnalysisProducts) -> str:
    """Machine-readable battery dump (one row per test, same formatting)."""
    header = ["row", "test", "group_a", "n_a", "mean_a", "sd_a",
              "group_b", "n_b", "mean_b", "sd_b",
              "statistic", "df", "p", "effect_size_name", "effect_size",
              "hedges_g", "significance"]
    rows = [header]
    for key in sorted(products.results):
        rows.append(_table2_row(key, products.results[key]))
    return _csv(rows)


def indices_csv(index_records) -> str:
    rows = [["cell_id", "si", "psi", "cei", "voi", "max_political", "max_cultural"]]
    for rec in sorted(index_records, key=lambda r: r.cell_id):
        rows.append([rec.cell_id, f"{rec.si:.6f}", f"{rec.psi:.6f}", f"{rec.cei:.6f}",
                     f"{rec.voi:.6f}", str(rec.max_political), str(rec.max_cultural)])
    return _csv(rows)


def reliability_csv(dimension_results, ai_human: dict | None) -> str:
    rows = [["dimension", "level", "alpha", "observed_disagreement",
             "expected_disagreement", "n_units", "n_pairable_values", "degenerate"]]
    for item in dimension_results:
        r = item.result
        rows.append([item.dimension, item.level, f"{r.alpha:.6f}",
                     f"{r.observed_disagreement:.6f}", f"{r.expected_disagreement:.6f}",
                     str(r.n_units), str(r.n_pairable_values), str(r.degenerate).lower()])
    if ai_human:
        for dim, alpha in sorted(ai_human.get("per_dimension_alpha", {}).items()):
            rows.append([f"ai_human_{dim}", "consensus_vs_expert", f"{alpha:.6f}",
                         "", "", "", "", ""])
        for dim, pct in sorted(ai_human.get("per_dimension_agreement", {}).items()):
            rows.append([f"ai_human_agreement_{dim}", "percent", f"{pct:.6f}",
                         "", "", "", "", ""])
        rows.append(["ai_human_overall", "pooled_interval",
                     f"{ai_human['overall_alpha']:.6f}", "", "", "", "", ""])
    return _csv(rows)
