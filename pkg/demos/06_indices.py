"""The composite representation indices and the ranked country profile."""
from t2i_audit.indices import (IndexRecord, NormalizationContext,
                               aggregate_indices, cei, psi,
                               symbolization_index, voi)

print("symbolization index (P - C)/(P + C + 1):")
for p, c in ((0, 0), (3, 1), (1, 3), (2, 2)):
    print(f"  P={p}, C={c} -> SI = {symbolization_index(p, c):+.3f}")

ctx = NormalizationContext(max_political=6, max_cultural=8)
print("\npolitical-sovereignty index (flag 40%, sovereignty 30%, political 30%):")
print(f"  psi(flag=2, sov=1, political=3 | max 6) = {psi(2, 1, 3, ctx):.3f}")
print("cultural-exoticization index (cultural 40%, traditionality 30%, flag absence 30%):")
print(f"  cei(cultural=4, modernity=3, flag=2 | max 8) = {cei(4, 3, 2, ctx):.3f}")
print(f"  ceiling: cei at max cultural, fully traditional, no flag = "
      f"{cei(8, 1, 0, ctx):.2f}")
print(f"\nvoi = psi - cei exactly: voi(0.447, 0.277) = {voi(0.447, 0.277):.3f}")

profile = [("usa", 0.447, 0.277), ("uk", 0.391, 0.367), ("france", 0.078, 0.515),
           ("japan", 0.009, 0.589), ("egypt", 0.005, 0.642)]
records, grouping = [], {}
for country, p, c in profile:
    cells = [f"{country}--{i}" for i in range(33)]
    records += [IndexRecord(cid, 0.0, p, c, p - c, 6, 8) for cid in cells]
    grouping[country] = cells

print("\nranked country profile (descending mean VOI):")
for g in aggregate_indices(records, grouping):
    print(f"  {g.group:8s} voi={g.voi_mean:+.3f} psi={g.psi_mean:.3f} cei={g.cei_mean:.3f}")
