import dataclasses
import json

import pytest

from corpus_fixture import build_profile_matched_consensus
from t2i_audit import StudyStore, build_design, load_config
from t2i_audit.battery import run_hypothesis_battery, AnalysisProducts
from t2i_audit.indices import compute_indices
from t2i_audit.report import ReportError, emit_reports, REPORT_FILES
from t2i_audit.store import CONSENSUS_LOG, StudyMismatchError


@pytest.fixture(scope="module")
def matched_setup(tmp_path_factory):
    config = load_config()
    store = StudyStore.open_or_init(tmp_path_factory.mktemp("report") / "study", config)
    records = build_profile_matched_consensus(config)
    indices = compute_indices(records)
    products = run_hypothesis_battery(records, indices, build_design(config), config)
    return store, config, products


class TestStoreLifecycle:
    def test_fresh_dir_initialized(self, tmp_path, seeded_config):
        store = StudyStore.open_or_init(tmp_path / "s", seeded_config)
        manifest = store.manifest()
        assert manifest["schema_version"] == 1
        assert manifest["coders"] == [c.id for c in seeded_config.coders]

    def test_reopen_same_config_no_mutation(self, tmp_path, seeded_config):
        store = StudyStore.open_or_init(tmp_path / "s", seeded_config)
        before = (tmp_path / "s" / "manifest.json").read_bytes()
        StudyStore.open_or_init(tmp_path / "s", seeded_config)
        assert (tmp_path / "s" / "manifest.json").read_bytes() == before

    def test_reopen_changed_config_refused(self, tmp_path, seeded_config):
        StudyStore.open_or_init(tmp_path / "s", seeded_config)
        changed = dataclasses.replace(seeded_config, seed=99)
        with pytest.raises(StudyMismatchError):
            StudyStore.open_or_init(tmp_path / "s", changed)

    def test_append_only_prefix_property(self, store):
        store.append(CONSENSUS_LOG, {"cell_id": "a", "v": 1})
        first = (store.root / CONSENSUS_LOG).read_bytes()
        store.append(CONSENSUS_LOG, {"cell_id": "b", "v": 2})
        second = (store.root / CONSENSUS_LOG).read_bytes()
        assert second.startswith(first)

    def test_latest_by_key_takes_newest(self, store):
        store.append(CONSENSUS_LOG, {"cell_id": "a", "v": 1})
        store.append(CONSENSUS_LOG, {"cell_id": "a", "v": 2})
        latest = store.latest_by_key(CONSENSUS_LOG, "cell_id")
        assert latest[("a",)]["v"] == 2

    def test_image_bytes_roundtrip(self, store):
        ref = store.put_image_bytes(b"pixels", suffix=".png")
        assert store.get_image_bytes(ref) == b"pixels"
        assert ref.startswith("sha256:")


class TestEmitReports:
    def test_all_files_written(self, matched_setup):
        store, config, products = matched_setup
        bundle = emit_reports(store, products, config)
        assert set(bundle.paths) == set(REPORT_FILES)
        for path in bundle.paths.values():
            assert path.exists()
            assert path.read_text(encoding="utf-8").endswith("\n")

    def test_deterministic_bytes_on_rerun(self, matched_setup):
        store, config, products = matched_setup
        first = {name: path.read_bytes()
                 for name, path in emit_reports(store, products, config).paths.items()}
        second = {name: path.read_bytes()
                  for name, path in emit_reports(store, products, config).paths.items()}
        assert first == second

    def test_table_s1_ranked_by_voi_usa_first(self, matched_setup):
        store, config, products = matched_setup
        bundle = emit_reports(store, products, config)
        lines = bundle.path("tableS1.csv").read_text().splitlines()
        header = lines[0].split(",")
        rows = [line.split(",") for line in lines[1:]]
        assert rows[0][0] == "usa"
        assert rows[-1][0] == "egypt"
        voi_col = header.index("voi_mean")
        vois = [float(r[voi_col]) for r in rows]
        assert vois == sorted(vois, reverse=True)
        assert vois[0] == pytest.approx(0.17, abs=0.02)

    def test_table_s2_festivals_first(self, matched_setup):
        store, config, products = matched_setup
        bundle = emit_reports(store, products, config)
        lines = bundle.path("tableS2.csv").read_text().splitlines()
        assert lines[1].split(",")[0] == "festivals"
        diffs = [float(line.split(",")[5]) for line in lines[1:]]
        assert diffs == sorted(diffs, reverse=True)

    def test_numeric_cells_round_trip(self, matched_setup):
        store, config, products = matched_setup
        bundle = emit_reports(store, products, config)
        for name in ("tableS1.csv", "fig_voi_bars.csv"):
            lines = bundle.path(name).read_text().splitlines()
            for line in lines[1:]:
                for cell in line.split(",")[3:]:
                    if cell:
                        float(cell)   # parses within formatting precision

    def test_no_negative_zero_cells(self, matched_setup):
        store, config, products = matched_setup
        bundle = emit_reports(store, products, config)
        for path in bundle.paths.values():
            assert "-0.000," not in path.read_text()

    def test_incomplete_battery_no_partial_files(self, tmp_path, seeded_config):
        store = StudyStore.open_or_init(tmp_path / "s", seeded_config)
        with pytest.raises(ReportError):
            emit_reports(store, AnalysisProducts(), seeded_config)
        leftovers = [p for p in (store.reports_dir).iterdir()]
        assert leftovers == []

    def test_lf_line_endings(self, matched_setup):
        store, config, products = matched_setup
        bundle = emit_reports(store, products, config)
        for path in bundle.paths.values():
            assert b"\r" not in path.read_bytes()


class TestPromptRegistry:
    def test_versions_listed_sorted(self, store):
        store.register_prompt_version("v2", "two")
        store.register_prompt_version("v1.5", "one-five")
        assert store.prompt_versions() == ["v1.5", "v2"]

    def test_queue_roundtrip(self, store):
        doc = {"entries": [{"cell_id": "x", "priority": "high"}], "budget": 5}
        store.write_queue(doc)
        assert store.read_queue() == doc
