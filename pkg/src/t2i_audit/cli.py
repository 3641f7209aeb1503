"""Command-line entry point.

One subcommand per pipeline stage plus run-all; every command is
idempotent and resumable (completed work is skipped unless --force).
Human-readable progress goes to stderr, machine-readable JSON-line
summaries to stdout. Exit codes: 0 success, 1 validation/configuration
error, 2 provider failure after retries.
"""
from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click

from . import pipeline
from .battery import IncompleteStoreError
from .design import ConfigError, StudyConfig, build_design, build_prompt, load_config
from .report import ReportError
from .store import StoreError, StudyMismatchError, StudyStore

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PROVIDER = 2


def _echo_err(message: str) -> None:
    click.echo(message, err=True)


def _emit(doc: dict) -> None:
    click.echo(json.dumps(doc, sort_keys=True))


def _load(config_path: str | None, mock: bool, seed: int | None) -> StudyConfig:
    config = load_config(config_path)
    if seed is not None and not mock:
        raise ConfigError("--seed is only meaningful together with --mock")
    if mock:
        config = dataclasses.replace(
            config,
            models=tuple(dataclasses.replace(m, provider_kind="mock") for m in config.models),
            coders=tuple(dataclasses.replace(c, provider_kind="mock") for c in config.coders),
            seed=config.seed if seed is None else seed,
        )
    return config


def common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                      default=None, help="Study config JSON (defaults to the packaged registry).")(fn)
    fn = click.option("--store", "store_path", type=click.Path(file_okay=False),
                      default="study", show_default=True, help="Study store directory.")(fn)
    fn = click.option("--mock", is_flag=True, help="Force every provider to its mock implementation.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Mock-world seed (requires --mock).")(fn)
    fn = click.option("--parallel", type=int, default=4, show_default=True,
                      help="Provider worker pool size.")(fn)
    fn = click.option("--force", is_flag=True, help="Redo completed work (records are appended, never rewritten).")(fn)
    return fn


@click.group()
def main() -> None:
    """Text-to-image country-representation audit pipeline."""


def _open_store(store_path: str, config: StudyConfig) -> StudyStore:
    return StudyStore.open_or_init(store_path, config)


def _run_guarded(fn) -> int:
    try:
        return fn()
    except (ConfigError, StoreError, StudyMismatchError, pipeline.StageOrderError,
            IncompleteStoreError, ReportError, KeyError, ValueError) as exc:
        _echo_err(f"error: {exc}")
        return EXIT_CONFIG


@main.command()
@common_options
def design(config_path, store_path, mock, seed, parallel, force) -> None:
    """Build the factorial design and print its shape."""
    def run() -> int:
        config = _load(config_path, mock, seed)
        store = _open_store(store_path, config)
        cells, _summary = pipeline.stage_design(store, config)
        _emit({"stage": "design", "cells": len(cells),
               "countries": len(config.countries), "concepts": len(config.concepts),
               "models": len(config.models),
               "example_prompt": build_prompt(cells[0], config)})
        return EXIT_OK
    sys.exit(_run_guarded(run))


@main.command()
@common_options
def generate(config_path, store_path, mock, seed, parallel, force) -> None:
    """Generate one image per design cell."""
    def run() -> int:
        config = _load(config_path, mock, seed)
        store = _open_store(store_path, config)
        cells = build_design(config)
        _echo_err(f"generating {len(cells)} cells (parallel={parallel})...")
        summary = pipeline.stage_generate(store, config, cells, mock=mock,
                                          parallel=parallel, force=force)
        _emit(summary.as_json())
        return EXIT_PROVIDER if summary.failed else EXIT_OK
    sys.exit(_run_guarded(run))


@main.command()
@common_options
def code(config_path, store_path, mock, seed, parallel, force) -> None:
    """Run the vision-coder ensemble over every generated image."""
    def run() -> int:
        config = _load(config_path, mock, seed)
        store = _open_store(store_path, config)
        _echo_err("coding images with the ensemble...")
        summary = pipeline.stage_code(store, config, mock=mock, force=force)
        _emit(summary.as_json())
        return EXIT_PROVIDER if summary.failed else EXIT_OK
    sys.exit(_run_guarded(run))


@main.command()
@common_options
def consensus(config_path, store_path, mock, seed, parallel, force) -> None:
    """Aggregate coder records into per-image consensus codes."""
    def run() -> int:
        config = _load(config_path, mock, seed)
        store = _open_store(store_path, config)
        summary = pipeline.stage_consensus(store, config)
        _emit(summary.as_json())
        return EXIT_OK
    sys.exit(_run_guarded(run))


@main.command()
@common_options
@click.option("--budget", type=int, default=None,
              help="Queue length cap (default: every entry above the medium threshold).")
def sample(config_path, store_path, mock, seed, parallel, force, budget) -> None:
    """Build the entropy-prioritized human-validation queue."""
    def run() -> int:
        config = _load(config_path, mock, seed)
        store = _open_store(store_path, config)
        summary = pipeline.stage_sample(store, config, budget=budget)
        _emit(summary.as_json())
        return EXIT_OK
    sys.exit(_run_guarded(run))


@main.command()
@common_options
def reliability(config_path, store_path, mock, seed, parallel, force) -> None:
    """Inter-coder reliability (and AI-human agreement once experts have coded)."""
    def run() -> int:
        config = _load(config_path, mock, seed)
        store = _open_store(store_path, config)
        summary = pipeline.stage_reliability(store, config)
        _emit(summary.as_json())
        return EXIT_OK
    sys.exit(_run_guarded(run))


@main.command()
@common_options
def analyze(config_path, store_path, mock, seed, parallel, force) -> None:
    """Compute indices and the full hypothesis battery."""
    def run() -> int:
        config = _load(config_path, mock, seed)
        store = _open_store(store_path, config)
        index_records, products = pipeline.stage_analyze(store, config)
        _emit({"stage": "analyze", "indices": len(index_records),
               "battery_rows": len(products.results)})
        return EXIT_OK
    sys.exit(_run_guarded(run))


@main.command()
@common_options
def report(config_path, store_path, mock, seed, parallel, force) -> None:
    """Emit the report bundle (hypothesis table, ranked profiles, figure data)."""
    def run() -> int:
        config = _load(config_path, mock, seed)
        store = _open_store(store_path, config)
        bundle = pipeline.stage_report(store, config)
        _emit({"stage": "report",
               "files": sorted(str(p) for p in bundle.paths.values())})
        return EXIT_OK
    sys.exit(_run_guarded(run))


@main.command("run-all")
@common_options
@click.option("--budget", type=int, default=None, help="Validation queue cap.")
def run_all(config_path, store_path, mock, seed, parallel, force, budget) -> None:
    """Run the whole pipeline: design through report."""
    def run() -> int:
        config = _load(config_path, mock, seed)
        store = _open_store(store_path, config)
        failed = 0
        for summary in pipeline.run_all(store, config, mock=mock, parallel=parallel,
                                        force=force, budget=budget):
            _echo_err(f"stage {summary.stage}: done={summary.done} "
                      f"skipped={summary.skipped} failed={summary.failed}")
            _emit(summary.as_json())
            failed += summary.failed
        return EXIT_PROVIDER if failed else EXIT_OK
    sys.exit(_run_guarded(run))


@main.command()
@common_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--token", required=True, help="Shared study token expected in X-Study-Token.")
@click.option("--coders", default="", help="Comma-separated expert coder ids to preregister.")
@click.option("--ui-dist", type=click.Path(file_okay=False), default=None,
              help="Built validation UI directory to serve at /.")
def serve(config_path, store_path, mock, seed, parallel, force,
          host, port, token, coders, ui_dist) -> None:
    """Serve the human-validation HTTP API (and the UI, when built)."""
    def run() -> int:
        import uvicorn

        from .webapi import create_app
        config = _load(config_path, mock, seed)
        store = _open_store(store_path, config)
        preregister = [c.strip() for c in coders.split(",") if c.strip()]
        app = create_app(store, config, token=token, preregister=preregister,
                         ui_dist=Path(ui_dist) if ui_dist else None)
        _echo_err(f"serving validation API on http://{host}:{port}")
        uvicorn.run(app, host=host, port=port, log_level="warning")
        return EXIT_OK
    sys.exit(_run_guarded(run))


if __name__ == "__main__":
    main()
