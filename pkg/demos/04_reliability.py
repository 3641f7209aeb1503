"""Krippendorff's alpha at the three measurement levels, with missing data,
plus quality-stratified percent agreement."""
from t2i_audit.reliability import (ReliabilityMatrix, krippendorff_alpha,
                                   percent_agreement, stratified_agreement)

print("two coders, four nominal units (a,a) (b,b) (a,b) (b,a):")
m = ReliabilityMatrix(("u1", "u2", "u3", "u4"), ("c1", "c2"),
                      ((0., 0.), (1., 1.), (0., 1.), (1., 0.)), "nominal")
r = krippendorff_alpha(m)
print(f"  Do={r.observed_disagreement:.3f}  De={r.expected_disagreement:.3f}  "
      f"alpha={r.alpha:.3f}")

print("\nthree coders, interval codes, missing values allowed:")
m = ReliabilityMatrix(("u1", "u2", "u3", "u4"), ("c1", "c2", "c3"),
                      ((1., 2., 3.), (2., 2., None), (4., None, 4.), (None, 5., 6.)),
                      "interval")
r = krippendorff_alpha(m)
print(f"  alpha={r.alpha:.4f}  pairable values={r.n_pairable_values}")

print("\nordinal level weights distances by cumulative marginals:")
m = ReliabilityMatrix(("u1", "u2", "u3", "u4", "u5"), ("c1", "c2"),
                      ((1., 1.), (2., 3.), (3., 3.), (2., 2.), (1., 2.)), "ordinal")
print(f"  alpha={krippendorff_alpha(m).alpha:.3f}")

print("\npercent agreement with the +-1 tolerance for unbounded counts:")
m = ReliabilityMatrix(("u1", "u2", "u3"), ("consensus", "expert"),
                      ((3., 4.), (10., 8.), (2., 2.)), "interval")
print(f"  exact: {percent_agreement(m):.2f}   within +-1: "
      f"{percent_agreement(m, count_dimension=True):.2f}")

print("\nagreement stratified by quality score band:")
rows = [(1., 1.)] * 9 + [(1., 2.)] + [(1., 1.)] * 7 + [(1., 2.)] * 3
m = ReliabilityMatrix(tuple(f"u{i}" for i in range(20)), ("a", "b"),
                      tuple(rows), "ordinal")
strata = {f"u{i}": ("high" if i < 10 else "low") for i in range(20)}
print(f"  {stratified_agreement(m, strata)}")
