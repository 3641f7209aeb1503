"""Hypothesis-testing engine.

Student's pooled-variance t with Cohen's d / Hedges' g, Pearson chi-square
with Cramer's V, two-way ANOVA (Type II sums of squares, reducing to the
classical decomposition when balanced), balanced mixed ANOVA (fixed factor
tested against its interaction with the random factor), and Tukey HSD with
adjusted p from the studentized range distribution. Everything is pure
computation on plain sequences; p-values come from the special-functions
module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import special

UNIT_COUNTRY_MEAN = "country_mean"
UNIT_IMAGE = "image"

EFFECT_POOLED_D = "pooled_d"
EFFECT_HEDGES_G = "hedges_g"


class DegenerateDataError(ValueError):
    """The statistic is undefined for this input (e.g. zero variance)."""


@dataclass(frozen=True)
class Sample:
    label: str
    values: tuple[float, ...]
    unit: str = UNIT_IMAGE

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def sd(self) -> float:
        """Sample standard deviation (n-1 denominator)."""
        if self.n < 2:
            raise DegenerateDataError(f"sample {self.label!r} needs n >= 2 for an SD")
        return float(np.std(self.values, ddof=1))

    def descriptive(self) -> tuple[str, int, float, float | None]:
        sd = self.sd if self.n >= 2 else None
        return (self.label, self.n, self.mean, sd)

    @classmethod
    def from_descriptives(cls, label: str, n: int, mean: float, sd: float,
                          unit: str = UNIT_COUNTRY_MEAN) -> "Sample":
        """Synthesize n values with exactly this mean and sample SD.

        Uses a fixed zero-mean unit-SD template, so the construction is
        deterministic; any statistic depending only on (n, mean, sd) is
        exact.
        """
        if n < 2:
            raise ValueError("need n >= 2")
        base = np.arange(n, dtype=float)
        base -= base.mean()
        base /= base.std(ddof=1)
        return cls(label, tuple(mean + sd * base), unit=unit)


@dataclass(frozen=True)
class StatResult:
    test_name: str
    statistic: float
    df: float | tuple[float, float]
    p_value: float
    effect_size_name: str
    effect_size: float
    group_descriptives: tuple[tuple[str, int, float, float | None], ...] = ()
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_value <= 1.0 or math.isnan(self.p_value)):
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")


@dataclass(frozen=True)
class AnovaRow:
    source: str
    ss: float
    df: float
    ms: float | None
    f: float | None
    p: float | None
    partial_eta_sq: float | None


@dataclass(frozen=True)
class AnovaTable:
    rows: tuple[AnovaRow, ...]

    def row(self, source: str) -> AnovaRow:
        for r in self.rows:
            if r.source == source:
                return r
        raise KeyError(f"no ANOVA row {source!r}")

    @property
    def total_ss(self) -> float:
        return sum(r.ss for r in self.rows)


# -- two-sample comparisons ------------------------------------------------------


def pooled_sd(a: Sample, b: Sample) -> float:
    va = np.var(a.values, ddof=1)
    vb = np.var(b.values, ddof=1)
    return math.sqrt(((a.n - 1) * va + (b.n - 1) * vb) / (a.n + b.n - 2))


def student_t(a: Sample, b: Sample) -> StatResult:
    """Independent-samples pooled-variance t, two-tailed."""
    if a.n < 2 or b.n < 2:
        raise DegenerateDataError("both samples need n >= 2")
    df = a.n + b.n - 2
    sp = pooled_sd(a, b)
    diff = a.mean - b.mean
    if sp == 0.0:
        if diff == 0.0:
            return StatResult("student_t", 0.0, df, 1.0, EFFECT_POOLED_D, 0.0,
                              (a.descriptive(), b.descriptive()))
        raise DegenerateDataError("zero pooled variance with unequal means")
    se = sp * math.sqrt(1.0 / a.n + 1.0 / b.n)
    t = diff / se
    p = special.t_sf_two_tailed(t, df)
    d = cohens_d(a, b, EFFECT_POOLED_D)
    g = cohens_d(a, b, EFFECT_HEDGES_G)
    return StatResult("student_t", t, df, p, EFFECT_POOLED_D, d,
                      (a.descriptive(), b.descriptive()),
                      extra={"hedges_g": g})


def welch_t(a: Sample, b: Sample) -> StatResult:
    """Welch's unequal-variance t, for sensitivity runs."""
    if a.n < 2 or b.n < 2:
        raise DegenerateDataError("both samples need n >= 2")
    va, vb = np.var(a.values, ddof=1), np.var(b.values, ddof=1)
    se2 = va / a.n + vb / b.n
    if se2 == 0.0:
        if a.mean == b.mean:
            return StatResult("welch_t", 0.0, a.n + b.n - 2, 1.0, EFFECT_POOLED_D, 0.0,
                              (a.descriptive(), b.descriptive()))
        raise DegenerateDataError("zero variance with unequal means")
    t = (a.mean - b.mean) / math.sqrt(se2)
    df = se2 ** 2 / ((va / a.n) ** 2 / (a.n - 1) + (vb / b.n) ** 2 / (b.n - 1))
    p = special.t_sf_two_tailed(t, df)
    return StatResult("welch_t", t, df, p, EFFECT_POOLED_D,
                      cohens_d(a, b, EFFECT_POOLED_D),
                      (a.descriptive(), b.descriptive()))


def cohens_d(a: Sample, b: Sample, variant: str = EFFECT_POOLED_D) -> float:
    """Standardized mean difference; hedges_g applies the small-sample factor."""
    sp = pooled_sd(a, b)
    if sp == 0.0:
        if a.mean == b.mean:
            return 0.0
        raise DegenerateDataError("zero pooled SD")
    d = (a.mean - b.mean) / sp
    if variant == EFFECT_POOLED_D:
        return d
    if variant == EFFECT_HEDGES_G:
        df = a.n + b.n - 2
        return d * (1.0 - 3.0 / (4.0 * df - 1.0))
    raise ValueError(f"unknown effect-size variant {variant!r}")


def chi_square_2x2(counts: Sequence[Sequence[float]]) -> StatResult:
    """Pearson chi-square on a 2x2 table (no continuity correction), with
    Cramer's V = sqrt(chi2 / n)."""
    table = np.asarray(counts, dtype=float)
    if table.shape != (2, 2):
        raise ValueError(f"expected a 2x2 table, got shape {table.shape}")
    if (table < 0).any():
        raise ValueError("counts must be non-negative")
    n = table.sum()
    row = table.sum(axis=1)
    col = table.sum(axis=0)
    if (row == 0).any() or (col == 0).any():
        raise DegenerateDataError("zero marginal in contingency table")
    expected = np.outer(row, col) / n
    if (expected <= 0).any():
        raise DegenerateDataError("expected cell count of zero")
    chi2 = float(((table - expected) ** 2 / expected).sum())
    p = special.chi2_sf(chi2, 1)
    v = math.sqrt(chi2 / n)
    desc = tuple((f"cell[{i}][{j}]", int(table[i, j]), table[i, j], None)
                 for i in range(2) for j in range(2))
    return StatResult("chi_square_2x2", chi2, 1, p, "cramers_v", v, desc,
                      extra={"n": float(n)})


# -- ANOVA -----------------------------------------------------------------------


def _effect_columns(labels: Sequence, levels: list) -> np.ndarray:
    """Sum-to-zero contrast columns (len(levels) - 1 of them)."""
    n = len(labels)
    k = len(levels)
    cols = np.zeros((n, k - 1))
    index = {lv: i for i, lv in enumerate(levels)}
    for row, lab in enumerate(labels):
        i = index[lab]
        if i < k - 1:
            cols[row, i] = 1.0
        else:
            cols[row, :] = -1.0
    return cols


def _rss(y: np.ndarray, design: np.ndarray) -> float:
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return float(resid @ resid)


def two_way_anova(values: Sequence[float], factor_a: Sequence, factor_b: Sequence,
                  names: tuple[str, str] = ("A", "B")) -> AnovaTable:
    """Two-way fixed-effects ANOVA with interaction.

    Type II sums of squares (each main effect adjusted for the other, the
    interaction adjusted for both), which reduce to the classical
    decomposition for balanced data. Requires every A x B cell filled and
    at least 2 replicates somewhere so the residual has df.
    """
    y = np.asarray(values, dtype=float)
    fa = list(factor_a)
    fb = list(factor_b)
    if not (len(y) == len(fa) == len(fb)):
        raise ValueError("values and factor labels must align")
    levels_a = sorted(set(fa), key=str)
    levels_b = sorted(set(fb), key=str)
    if len(levels_a) < 2 or len(levels_b) < 2:
        raise ValueError("each factor needs >= 2 levels")
    cell_counts: dict[tuple, int] = {}
    for la, lb in zip(fa, fb):
        cell_counts[(la, lb)] = cell_counts.get((la, lb), 0) + 1
    for la in levels_a:
        for lb in levels_b:
            if (la, lb) not in cell_counts:
                raise ValueError(f"empty design cell ({la!r}, {lb!r})")

    one = np.ones((len(y), 1))
    xa = _effect_columns(fa, levels_a)
    xb = _effect_columns(fb, levels_b)
    xab = np.column_stack([xa[:, i] * xb[:, j]
                           for i in range(xa.shape[1]) for j in range(xb.shape[1])])

    rss_a = _rss(y, np.hstack([one, xa]))
    rss_b = _rss(y, np.hstack([one, xb]))
    rss_ab_main = _rss(y, np.hstack([one, xa, xb]))
    rss_full = _rss(y, np.hstack([one, xa, xb, xab]))

    ss_a = rss_b - rss_ab_main           # A adjusted for B
    ss_b = rss_a - rss_ab_main           # B adjusted for A
    ss_inter = rss_ab_main - rss_full
    ss_err = rss_full

    # lstsq leaves ~1e-30 residual noise on exactly-constant data; collapse it
    noise_floor = 1e-12 * max(1.0, float(y @ y))
    ss_a, ss_b, ss_inter, ss_err = (0.0 if ss < noise_floor else ss
                                    for ss in (ss_a, ss_b, ss_inter, ss_err))

    df_a = len(levels_a) - 1
    df_b = len(levels_b) - 1
    df_inter = df_a * df_b
    df_err = len(y) - len(levels_a) * len(levels_b)
    if df_err < 1:
        raise ValueError("no residual degrees of freedom (need replicates)")

    ms_err = ss_err / df_err

    def make_row(source: str, ss: float, df: int) -> AnovaRow:
        ss = max(0.0, ss)
        ms = ss / df
        if ms_err == 0.0:
            return AnovaRow(source, ss, df, ms, None, None, None)
        f = ms / ms_err
        return AnovaRow(source, ss, df, ms, f, special.f_sf(f, df, df_err),
                        ss / (ss + ss_err) if (ss + ss_err) > 0 else None)

    rows = (
        make_row(names[0], ss_a, df_a),
        make_row(names[1], ss_b, df_b),
        make_row(f"{names[0]}x{names[1]}", ss_inter, df_inter),
        AnovaRow("residual", max(0.0, ss_err), df_err, ms_err, None, None, None),
    )
    return AnovaTable(rows)


def mixed_anova_balanced(values: Sequence[float], fixed: Sequence, random: Sequence,
                         names: tuple[str, str] = ("fixed", "random")) -> AnovaTable:
    """Balanced mixed-model ANOVA: fixed factor crossed with a random factor.

    Expected mean squares put the fixed effect over the interaction:
    F = MS_fixed / MS_fixed_x_random with df (m-1, (m-1)(c-1)). The random
    factor is likewise tested against the interaction; the interaction is
    tested against the within-cell residual when replicates exist. Raises
    on any imbalance (use two_way_anova then).
    """
    y = np.asarray(values, dtype=float)
    ff = list(fixed)
    rr = list(random)
    if not (len(y) == len(ff) == len(rr)):
        raise ValueError("values and factor labels must align")
    levels_f = sorted(set(ff), key=str)
    levels_r = sorted(set(rr), key=str)
    m, c = len(levels_f), len(levels_r)
    if m < 2 or c < 2:
        raise ValueError("each factor needs >= 2 levels")

    cells: dict[tuple, list[float]] = {}
    for v, lf, lr in zip(y, ff, rr):
        cells.setdefault((lf, lr), []).append(float(v))
    reps = {len(vals) for vals in cells.values()}
    if len(cells) != m * c or len(reps) != 1:
        raise ValueError("layout is unbalanced; use two_way_anova for unbalanced data")
    r = reps.pop()

    grand = y.mean()
    mean_f = {lf: np.mean([v for v, l in zip(y, ff) if l == lf]) for lf in levels_f}
    mean_r = {lr: np.mean([v for v, l in zip(y, rr) if l == lr]) for lr in levels_r}
    cell_mean = {k: float(np.mean(vals)) for k, vals in cells.items()}

    ss_f = c * r * sum((mean_f[lf] - grand) ** 2 for lf in levels_f)
    ss_r = m * r * sum((mean_r[lr] - grand) ** 2 for lr in levels_r)
    ss_inter = r * sum((cell_mean[(lf, lr)] - mean_f[lf] - mean_r[lr] + grand) ** 2
                       for lf in levels_f for lr in levels_r)
    ss_within = sum((v - cell_mean[(lf, lr)]) ** 2
                    for (lf, lr), vals in cells.items() for v in vals)

    df_f, df_r = m - 1, c - 1
    df_inter = df_f * df_r
    df_within = m * c * (r - 1)

    ms_f = ss_f / df_f
    ms_r = ss_r / df_r
    ms_inter = ss_inter / df_inter

    def vs_inter(source: str, ss: float, df: int, ms: float) -> AnovaRow:
        if ms_inter == 0.0:
            return AnovaRow(source, ss, df, ms, None, None, None)
        f = ms / ms_inter
        return AnovaRow(source, ss, df, ms, f, special.f_sf(f, df, df_inter),
                        ss / (ss + ss_inter) if (ss + ss_inter) > 0 else None)

    rows = [vs_inter(names[0], ss_f, df_f, ms_f),
            vs_inter(names[1], ss_r, df_r, ms_r)]
    if df_within > 0:
        ms_within = ss_within / df_within
        if ms_within == 0.0:
            rows.append(AnovaRow(f"{names[0]}x{names[1]}", ss_inter, df_inter, ms_inter,
                                 None, None, None))
        else:
            f_i = ms_inter / ms_within
            rows.append(AnovaRow(f"{names[0]}x{names[1]}", ss_inter, df_inter, ms_inter,
                                 f_i, special.f_sf(f_i, df_inter, df_within),
                                 ss_inter / (ss_inter + ss_within)))
        rows.append(AnovaRow("residual", ss_within, df_within, ms_within, None, None, None))
    else:
        rows.append(AnovaRow(f"{names[0]}x{names[1]}", ss_inter, df_inter, ms_inter,
                             None, None, None))
    return AnovaTable(tuple(rows))


# -- Tukey HSD ---------------------------------------------------------------------


@dataclass(frozen=True)
class TukeyComparison:
    group_a: str
    group_b: str
    mean_diff: float
    q_statistic: float
    p_adjusted: float
    significant: bool
    warning: str = ""


def tukey_hsd(groups: Sequence[Sample], alpha: float = 0.05) -> list[TukeyComparison]:
    """All pairwise comparisons with family-wise adjusted p (Tukey-Kramer for
    unequal n). Zero-variance n=2 groups are flagged but still compared via
    the pooled error term."""
    if len(groups) < 2:
        raise ValueError("need >= 2 groups")
    warnings = {}
    for g in groups:
        if g.n < 2:
            raise DegenerateDataError(f"group {g.label!r} needs n >= 2")
        if np.var(g.values, ddof=1) == 0.0:
            warnings[g.label] = "zero within-group variance"
    k = len(groups)
    n_total = sum(g.n for g in groups)
    df_err = n_total - k
    ss_err = sum((g.n - 1) * np.var(g.values, ddof=1) for g in groups)
    ms_err = ss_err / df_err
    if ms_err == 0.0:
        raise DegenerateDataError("all groups have zero variance; q is undefined")

    out = []
    for i in range(k):
        for j in range(i + 1, k):
            a, b = groups[i], groups[j]
            se = math.sqrt(ms_err / 2.0 * (1.0 / a.n + 1.0 / b.n))
            q = abs(a.mean - b.mean) / se
            p = special.studentized_range_sf(q, k, df_err)
            warn = "; ".join(w for lbl, w in warnings.items() if lbl in (a.label, b.label))
            out.append(TukeyComparison(a.label, b.label, a.mean - b.mean, q, p,
                                       p < alpha, warn))
    return out
