import dataclasses

import pytest

from t2i_audit import StudyStore, load_config
from t2i_audit.coding import CodingRecord, default_scheme


@pytest.fixture(scope="session")
def default_config():
    return load_config()


@pytest.fixture()
def seeded_config(default_config):
    return dataclasses.replace(default_config, seed=7)


@pytest.fixture()
def store(tmp_path, seeded_config):
    return StudyStore.open_or_init(tmp_path / "study", seeded_config)


@pytest.fixture(scope="session")
def scheme():
    return default_scheme()


def make_record(cell_id="usa--women--midjourney", coder_id="c1", political=1,
                cultural=2, flag=0, sovereignty=0, modernity=3,
                confidence=0.9, valid=True, coder_kind="vlm"):
    return CodingRecord(
        cell_id=cell_id, coder_id=coder_id, coder_kind=coder_kind,
        political_symbols=political, cultural_symbols=cultural,
        flag_appearance=flag, sovereignty=sovereignty, modernity=modernity,
        confidence=confidence, prompt_version="v1", valid=valid,
    )


@pytest.fixture()
def record_factory():
    return make_record
