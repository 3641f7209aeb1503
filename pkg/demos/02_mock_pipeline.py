"""Run the whole audit offline: deterministic mock providers, 396 cells,
consensus, validation queue, reliability, indices, battery, reports.

Equivalent shell command: t2i-audit run-all --mock --seed 7 --store demo_study
"""
import dataclasses
import time

from t2i_audit import StudyStore, load_config, pipeline

config = dataclasses.replace(load_config(), seed=7)
store = StudyStore.open_or_init("demo_study", config)

start = time.time()
for summary in pipeline.run_all(store, config, mock=True, parallel=8):
    print(f"  {summary.stage:12s} done={summary.done:4d} skipped={summary.skipped}")
print(f"pipeline finished in {time.time() - start:.1f}s")

print("\nreport bundle:")
for path in sorted((store.root / "reports").iterdir()):
    print(f"  {path}")

print("\ncountry profile (reports/tableS1.csv):")
for line in (store.root / "reports" / "tableS1.csv").read_text().splitlines()[:6]:
    print(f"  {line}")

print("\nhypothesis rows (reports/table2.csv, first 6):")
for line in (store.root / "reports" / "table2.csv").read_text().splitlines()[:6]:
    print(f"  {line}")
