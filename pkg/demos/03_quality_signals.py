"""Quality layer in isolation: consensus rules, cross-coder entropy, the
0-100 quality score, and entropy-prioritized sampling."""
from t2i_audit.coding import CodingRecord
from t2i_audit.quality import (consensus, external_entropy,
                               prioritize_for_validation, quality_score)


def coder(cid, political, cultural, flag, sov, modernity, confidence=0.9):
    return CodingRecord(
        cell_id="china--festivals--midjourney", coder_id=cid, coder_kind="vlm",
        political_symbols=political, cultural_symbols=cultural,
        flag_appearance=flag, sovereignty=sov, modernity=modernity,
        confidence=confidence, prompt_version="v1", valid=True)


agreeing = [coder(f"c{i}", 0, 5, 0, 0, 2) for i in range(4)]
print("unanimous ensemble:")
rec = consensus(agreeing)
print(f"  codes={rec.codes()}  h_ext={rec.h_ext}  Q={rec.quality_score:.1f}")

disagreeing = [
    coder("c0", 0, 4, 0, 0, 2),
    coder("c1", 1, 5, 0, 0, 2, confidence=0.7),
    coder("c2", 0, 7, 4, 1, 3, confidence=0.5),
    coder("c3", 2, 5, 4, 1, 1, confidence=0.6),
]
rec = consensus(disagreeing)
print("\nsplit ensemble (flag 0,0,4,4 -> median 2, tie flagged):")
print(f"  codes={rec.codes()}  tie_broken={rec.tie_broken}")
print(f"  h_ext={rec.h_ext:.3f}  mean_conf={rec.mean_confidence:.2f}  "
      f"Q={rec.quality_score:.1f}")

print("\nentropy scale: one 2-2 split dimension contributes 1 bit / 5 dims = 0.2")
print(f"  h = {external_entropy([coder('a',0,0,0,0,1), coder('b',0,0,0,0,1), coder('c',0,0,0,0,5), coder('d',0,0,0,0,5)]):.2f}")

print(f"\nquality score reference point: Q(h=0.35, conf=0.83) = "
      f"{quality_score(0.35, 0.83):.2f}")

# fifteen images, three above the high threshold, four in the medium band
from t2i_audit.quality import ConsensusRecord
stubs = [ConsensusRecord(f"img{i:02d}", 0, 0, 0, 0, 1, h, 0.8,
                         quality_score(min(h, 2.0), 0.8), 4, False)
         for i, h in enumerate([0.05, 0.72, 0.33, 0.45, 0.81, 0.12, 0.55,
                                0.02, 0.48, 0.61, 0.2, 0.0, 0.39, 0.52, 0.1])]
queue = prioritize_for_validation(stubs, budget=7)
print("\nvalidation queue (budget 7, high stratum first, descending):")
for entry in queue:
    print(f"  {entry.cell_id}  h={entry.h_ext:.2f}  {entry.priority}")
