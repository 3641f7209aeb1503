"""Stage orchestration: the resumable steps between an empty store and a
report bundle.

Each stage reads only the stores it needs, skips work that is already
done (unless forced), appends new records, and raises StageOrderError
naming the missing predecessor when run too early. The CLI maps these
one-to-one onto subcommands.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import report as report_mod
from .battery import AnalysisProducts, run_hypothesis_battery
from .coding import (CodingRecord, CodingScheme, UncodableImageError,
                     code_with_ensemble, default_scheme, packaged_prompt_text)
from .design import StudyConfig, StudyDesign, build_design, build_prompt
from .indices import IndexRecord, NormalizationContext, compute_indices
from .mocks import build_mock_providers
from .providers import ImageRecord, ProviderGateway, RemoteImageProvider, RemoteVlmCoder
from .quality import (ConsensusRecord, InsufficientEnsembleError, consensus,
                      prioritize_for_validation)
from .reliability import consensus_vs_experts, ensemble_reliability
from .store import (CODING_LOG, CONSENSUS_LOG, EXPERT_LOG, IMAGES_LOG,
                    StudyStore)


class StageOrderError(RuntimeError):
    def __init__(self, missing_stage: str, needed_by: str):
        super().__init__(f"stage '{needed_by}' needs '{missing_stage}' to run first")
        self.missing_stage = missing_stage


def make_gateway(store: StudyStore, config: StudyConfig, mock: bool = False,
                 sleep=None) -> ProviderGateway:
    if mock:
        images, coders = build_mock_providers(config)
    else:
        mock_images, mock_coders = build_mock_providers(config)
        images = {m.id: (mock_images[m.id] if m.provider_kind == "mock"
                         else RemoteImageProvider(m, config.image_size))
                  for m in config.models}
        coders = {c.id: (mock_coders[c.id] if c.provider_kind == "mock"
                         else RemoteVlmCoder(c))
                  for c in config.coders}
    kwargs = {} if sleep is None else {"sleep": sleep}
    return ProviderGateway(store, config, images, coders, **kwargs)


def ensure_prompt_registered(store: StudyStore, config: StudyConfig) -> None:
    for version in {c.prompt_version for c in config.coders}:
        if version not in store.prompt_versions():
            store.register_prompt_version(version, packaged_prompt_text(version))


# -- loaders ------------------------------------------------------------------


def load_images(store: StudyStore) -> dict[str, ImageRecord]:
    latest = store.latest_by_key(IMAGES_LOG, "cell_id")
    return {key[0]: ImageRecord.from_dict(rec) for key, rec in latest.items()}


def load_coding_records(store: StudyStore) -> dict[tuple[str, str], CodingRecord]:
    latest = store.latest_by_key(CODING_LOG, "cell_id", "coder_id")
    return {key: CodingRecord.from_dict(rec) for key, rec in latest.items()}


def load_consensus(store: StudyStore) -> dict[str, ConsensusRecord]:
    latest = store.latest_by_key(CONSENSUS_LOG, "cell_id")
    return {key[0]: ConsensusRecord.from_dict(rec) for key, rec in latest.items()}


def load_analyzable_consensus(store: StudyStore) -> dict[str, ConsensusRecord]:
    """Consensus records still backed by >= 2 valid coder records.

    A consensus row can go stale when coding records are superseded (e.g.
    a forced re-code that degrades): the append-only log keeps the old
    consensus, but the cell must drop out of analysis and stay routed to
    human validation.
    """
    cons = load_consensus(store)
    valid_counts: dict[str, int] = {}
    for (cell_id, _coder), rec in load_coding_records(store).items():
        if rec.valid:
            valid_counts[cell_id] = valid_counts.get(cell_id, 0) + 1
    return {cell: rec for cell, rec in cons.items()
            if valid_counts.get(cell, 0) >= 2}


def load_expert_records(store: StudyStore) -> dict[tuple[str, str], CodingRecord]:
    latest = store.latest_by_key(EXPERT_LOG, "cell_id", "coder_id")
    out = {}
    for key, rec in latest.items():
        fields = {k: rec[k] for k in CodingRecord.__dataclass_fields__ if k in rec}
        out[key] = CodingRecord.from_dict(fields)
    return out


# -- stages --------------------------------------------------------------------


@dataclass
class StageSummary:
    stage: str
    done: int
    skipped: int = 0
    failed: int = 0
    extra: dict | None = None

    def as_json(self) -> dict:
        doc = {"stage": self.stage, "done": self.done,
               "skipped": self.skipped, "failed": self.failed}
        if self.extra:
            doc.update(self.extra)
        return doc


def stage_design(store: StudyStore, config: StudyConfig) -> tuple[StudyDesign, StageSummary]:
    design = build_design(config)
    rows = ["cell_id,country,concept,model,prompt"]
    for cell in design:
        prompt = build_prompt(cell, config)
        rows.append(f'{cell.cell_id},{cell.country},{cell.concept},{cell.model},"{prompt}"')
    store.write_csv("design.csv", "\n".join(rows) + "\n")
    return design, StageSummary("design", done=len(design))


def stage_generate(store: StudyStore, config: StudyConfig, design: StudyDesign,
                   mock: bool = False, parallel: int = 4, force: bool = False,
                   sleep=None) -> StageSummary:
    gateway = make_gateway(store, config, mock=mock, sleep=sleep)
    existing = set(load_images(store))
    todo = [(cell, build_prompt(cell, config)) for cell in design
            if force or cell.cell_id not in existing]
    skipped = len(design) - len(todo)
    _records, failures = gateway.generate_all(todo, parallel=parallel, force=force)
    return StageSummary("generate", done=len(todo) - len(failures),
                        skipped=skipped, failed=len(failures),
                        extra={"failed_cells": failures} if failures else None)


def stage_code(store: StudyStore, config: StudyConfig,
               scheme: CodingScheme | None = None, mock: bool = False,
               force: bool = False, sleep=None) -> StageSummary:
    images = load_images(store)
    if not images:
        raise StageOrderError("generate", "code")
    scheme = scheme or default_scheme()
    ensure_prompt_registered(store, config)
    gateway = make_gateway(store, config, mock=mock, sleep=sleep)
    existing = load_coding_records(store)
    done = skipped = failed = 0
    uncodable = []
    for cell_id in sorted(images):
        if not force and all((cell_id, coder.id) in existing for coder in config.coders):
            skipped += 1
            continue
        try:
            code_with_ensemble(gateway, images[cell_id], list(config.coders),
                               scheme, config.prompt_template_version)
            done += 1
        except UncodableImageError:
            uncodable.append(cell_id)
            failed += 1
    return StageSummary("code", done=done, skipped=skipped, failed=failed,
                        extra={"uncodable": uncodable} if uncodable else None)


def stage_consensus(store: StudyStore, config: StudyConfig,
                    scheme: CodingScheme | None = None) -> StageSummary:
    records = load_coding_records(store)
    if not records:
        raise StageOrderError("code", "consensus")
    scheme = scheme or default_scheme()
    by_cell: dict[str, list[CodingRecord]] = {}
    for (cell_id, _coder), rec in records.items():
        by_cell.setdefault(cell_id, []).append(rec)
    existing = load_consensus(store)
    appended = skipped = 0
    under_coded = []
    for cell_id in sorted(by_cell):
        try:
            rec = consensus(by_cell[cell_id], scheme,
                            log_base=config.entropy_log_base,
                            bucket_counts=config.entropy_bucket_counts,
                            h_max=config.quality_h_max,
                            w_entropy=config.quality_w_entropy,
                            w_confidence=config.quality_w_confidence)
        except InsufficientEnsembleError:
            under_coded.append(cell_id)
            store.audit("insufficient_ensemble", cell_id=cell_id)
            continue
        prior = existing.get(cell_id)
        if prior is not None and prior.to_dict() == rec.to_dict():
            skipped += 1
            continue
        store.append(CONSENSUS_LOG, rec.to_dict())
        appended += 1
    if under_coded:
        doc = store.read_queue() or {}
        forced = sorted(set(doc.get("forced_high", [])) | set(under_coded))
        doc["forced_high"] = forced
        doc.setdefault("entries", [])
        store.write_queue(doc)
    return StageSummary("consensus", done=appended, skipped=skipped,
                        failed=len(under_coded),
                        extra={"under_coded": under_coded} if under_coded else None)


def stage_sample(store: StudyStore, config: StudyConfig,
                 budget: int | None = None) -> StageSummary:
    cons = load_consensus(store)
    if not cons:
        raise StageOrderError("consensus", "sample")
    doc = store.read_queue() or {}
    forced = doc.get("forced_high", [])
    if budget is None:
        budget = config.sampling_budget
    entries = prioritize_for_validation(
        sorted(cons.values(), key=lambda r: r.cell_id),
        high_threshold=config.sampling_high_threshold,
        medium_threshold=config.sampling_medium_threshold,
        budget=budget, forced_high=forced)
    store.write_queue({
        "high_threshold": config.sampling_high_threshold,
        "medium_threshold": config.sampling_medium_threshold,
        "budget": budget,
        "forced_high": list(forced),
        "entries": [e.to_dict() for e in entries],
    })
    return StageSummary("sample", done=len(entries))


def stage_reliability(store: StudyStore, config: StudyConfig,
                      scheme: CodingScheme | None = None) -> StageSummary:
    scheme = scheme or default_scheme()
    coding = load_coding_records(store)
    if not coding:
        raise StageOrderError("code", "reliability")
    by_coder: dict[str, dict[str, dict]] = {}
    for (cell_id, coder_id), rec in coding.items():
        if rec.valid:
            by_coder.setdefault(coder_id, {})[cell_id] = rec.codes()
    dims = ensemble_reliability(by_coder, scheme)

    ai_human = None
    experts = load_expert_records(store)
    if experts:
        cons = load_analyzable_consensus(store)
        consensus_codes = {cell: rec.codes() for cell, rec in cons.items()}
        expert_codes: dict[str, dict[str, dict]] = {}
        for (cell_id, coder_id), rec in experts.items():
            expert_codes.setdefault(coder_id, {})[cell_id] = rec.codes()
        ai_human = consensus_vs_experts(consensus_codes, expert_codes, scheme)

    store.write_csv("reliability.csv", report_mod.reliability_csv(dims, ai_human))
    return StageSummary("reliability", done=len(dims),
                        extra={"ai_human": bool(ai_human)})


def stage_analyze(store: StudyStore, config: StudyConfig,
                  design: StudyDesign | None = None
                  ) -> tuple[list[IndexRecord], AnalysisProducts]:
    cons = load_analyzable_consensus(store)
    if not cons:
        raise StageOrderError("consensus", "analyze")
    design = design or build_design(config)
    records = sorted(cons.values(), key=lambda r: r.cell_id)
    ctx = NormalizationContext.from_consensus(records)
    index_records = compute_indices(records, ctx)
    store.write_csv("indices.csv", report_mod.indices_csv(index_records))
    products = run_hypothesis_battery(records, index_records, design, config)
    store.write_csv("battery.csv", report_mod.battery_csv(products))
    return index_records, products


def stage_report(store: StudyStore, config: StudyConfig,
                 design: StudyDesign | None = None) -> report_mod.ReportBundle:
    _indices, products = stage_analyze(store, config, design)
    return report_mod.emit_reports(store, products, config)


def run_all(store: StudyStore, config: StudyConfig, mock: bool = False,
            parallel: int = 4, force: bool = False, budget: int | None = None,
            sleep=None) -> list[StageSummary]:
    design, design_summary = stage_design(store, config)
    summaries = [
        design_summary,
        stage_generate(store, config, design, mock=mock, parallel=parallel,
                       force=force, sleep=sleep),
        stage_code(store, config, mock=mock, force=force, sleep=sleep),
        stage_consensus(store, config),
        stage_sample(store, config, budget=budget),
        stage_reliability(store, config),
    ]
    stage_report(store, config, design)
    summaries.append(StageSummary("report", done=len(report_mod.REPORT_FILES)))
    return summaries
