"""The self-contained statistics engine: pooled t with both effect-size
variants, chi-square with Cramer's V, two-way and mixed ANOVA, Tukey HSD
with exact studentized-range p-values."""
import numpy as np

from t2i_audit import special
from t2i_audit.stats import (Sample, chi_square_2x2, mixed_anova_balanced,
                             student_t, tukey_hsd, two_way_anova)

print("country-level contrast from descriptives (n=5 vs n=7, df=10):")
west = Sample.from_descriptives("West", 5, 0.76, 0.70)
east = Sample.from_descriptives("East", 7, 0.20, 0.16)
r = student_t(west, east)
print(f"  t({r.df}) = {r.statistic:.3f}, p = {r.p_value:.4f}, "
      f"d = {r.effect_size:.3f}, g = {r.extra['hedges_g']:.3f}")

print("\n2x2 association (sovereignty presence by region):")
c = chi_square_2x2([[106, 59], [53, 178]])
print(f"  chi2(1) = {c.statistic:.2f}, p = {c.p_value:.2e}, V = {c.effect_size:.3f}")

print("\ntwo-way ANOVA with interaction (hand-checkable 2x2):")
table = two_way_anova([1, 3, 2, 4, 5, 7, 10, 12],
                      ["A1"] * 4 + ["A2"] * 4, ["B1", "B1", "B2", "B2"] * 2)
for row in table.rows:
    f = f"{row.f:.2f}" if row.f is not None else "-"
    print(f"  {row.source:9s} SS={row.ss:6.1f} df={row.df} F={f}")

print("\nbalanced mixed ANOVA: fixed factor tested against its interaction")
rng = np.random.default_rng(3)
values, fixed, random = [], [], []
for m, shift in (("gpt-image-1", 0.0), ("midjourney", 0.8), ("nanobanana", 0.3)):
    for country in range(6):
        for _ in range(4):
            values.append(shift + 0.2 * country + rng.normal(0, 0.4))
            fixed.append(m)
            random.append(f"country{country}")
table = mixed_anova_balanced(values, fixed, random, names=("model", "country"))
row = table.row("model")
print(f"  F({row.df:.0f}, {table.row('modelxcountry').df:.0f}) = {row.f:.2f}, "
      f"p = {row.p:.4f}, partial eta^2 = {row.partial_eta_sq:.3f}")

print("\nTukey HSD across the three models:")
groups = [Sample(m, [v for v, f in zip(values, fixed) if f == m])
          for m in ("gpt-image-1", "midjourney", "nanobanana")]
for comp in tukey_hsd(groups):
    print(f"  {comp.group_a} vs {comp.group_b}: q = {comp.q_statistic:.2f}, "
          f"adjusted p = {comp.p_adjusted:.4f}")

print("\nstudentized range critical value (k=3, df=10):",
      f"{special.studentized_range_critical(0.05, 3, 10):.3f}")
