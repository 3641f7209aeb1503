import dataclasses
import itertools

import pytest
from hypothesis import given, strategies as st

from t2i_audit.design import (GROUPINGS, Concept, ConfigError, Country,
                              LookupError_, ModelSpec, StudyCell, VlmCoderSpec,
                              build_design, build_prompt, config_from_dict,
                              group_cells, load_config)


def small_config(n_countries=2, n_concepts=3, n_models=2):
    countries = [Country(f"c{i}", f"Country {i}", "West" if i == 0 else "East",
                         english_core=(i == 0)) for i in range(n_countries)]
    concepts = [Concept(f"k{i}", f"concept {i}",
                        "national_identity" if i == 0 else "demographic")
                for i in range(n_concepts)]
    models = [ModelSpec(f"m{i}", f"Model {i}") for i in range(n_models)]
    coders = [VlmCoderSpec(f"v{i}", f"Coder {i}") for i in range(4)]
    base = load_config()
    return dataclasses.replace(base, countries=tuple(countries),
                               concepts=tuple(concepts), models=tuple(models),
                               coders=tuple(coders))


class TestRegistries:
    def test_default_registry_shape(self, default_config):
        assert len(default_config.countries) == 12
        assert len(default_config.concepts) == 11
        assert len(default_config.models) == 3
        assert len(default_config.coders) == 4

    def test_default_regions(self, default_config):
        west = [c.id for c in default_config.countries if c.region == "West"]
        east = [c.id for c in default_config.countries if c.region == "East"]
        assert sorted(west) == sorted(["usa", "uk", "france", "germany", "australia"])
        assert len(east) == 7

    def test_english_core_is_usa_uk(self, default_config):
        core = {c.id for c in default_config.countries if c.english_core}
        assert core == {"usa", "uk"}

    def test_english_core_implies_west(self):
        with pytest.raises(ConfigError):
            Country("x", "X", "East", english_core=True)

    def test_duplicate_id_rejected_with_name(self, default_config):
        doc = {
            "countries": [{"id": "usa", "display_name": "A", "region": "West"},
                          {"id": "usa", "display_name": "B", "region": "West"}],
            "concepts": [{"id": "k", "display_name": "k", "category": "demographic"}],
            "models": [{"id": "m", "display_name": "M"}],
            "coders": [{"id": "v", "display_name": "V"}],
        }
        with pytest.raises(ConfigError, match="usa"):
            config_from_dict(doc)

    def test_image_size_default(self, default_config):
        assert default_config.image_size == 1024


class TestBuildDesign:
    def test_default_design_has_396_cells(self, default_config):
        assert len(build_design(default_config)) == 396

    def test_minimal_design(self):
        cfg = small_config(1, 1, 1)
        cells = build_design(cfg)
        assert len(cells) == 1
        assert cells[0].cell_id == "c0--k0--m0"

    def test_country_major_order_by_enumeration(self):
        cfg = small_config(2, 3, 2)
        cells = build_design(cfg)
        assert len(cells) == 12
        expected = [StudyCell(c.id, k.id, m.id, f"{c.id}--{k.id}--{m.id}")
                    for c, k, m in itertools.product(cfg.countries, cfg.concepts, cfg.models)]
        assert list(cells) == expected

    def test_cell_ids_unique(self, default_config):
        cells = build_design(default_config)
        assert len({c.cell_id for c in cells}) == len(cells)

    def test_deterministic(self, default_config):
        assert build_design(default_config) == build_design(default_config)


class TestBuildPrompt:
    def test_women_in_china(self, default_config):
        cell = StudyCell("china", "women", "midjourney", "china--women--midjourney")
        assert build_prompt(cell, default_config) == "women in China"

    def test_festivals_in_united_states(self, default_config):
        cell = StudyCell("usa", "festivals", "midjourney", "usa--festivals--midjourney")
        assert build_prompt(cell, default_config) == "festivals in United States"

    def test_country_concept_uses_bare_name(self, default_config):
        cell = StudyCell("japan", "country", "midjourney", "japan--country--midjourney")
        assert build_prompt(cell, default_config) == "Japan"

    def test_no_template_placeholders_survive(self, default_config):
        for cell in build_design(default_config):
            prompt = build_prompt(cell, default_config)
            assert "[" not in prompt and "]" not in prompt
            assert "{" not in prompt and "}" not in prompt

    def test_unknown_id_raises_lookup_error(self, default_config):
        cell = StudyCell("narnia", "women", "midjourney", "narnia--women--midjourney")
        with pytest.raises(LookupError_):
            build_prompt(cell, default_config)


class TestGroupCells:
    def test_west_east_sizes(self, default_config):
        groups = group_cells(build_design(default_config), "west_east", default_config)
        assert len(groups["West"]) == 165
        assert len(groups["East"]) == 231

    def test_english_core_vs_rest_sizes(self, default_config):
        groups = group_cells(build_design(default_config), "english_core_vs_rest",
                             default_config)
        assert len(groups["core"]) == 66
        assert len(groups["rest"]) == 330

    def test_by_model_balanced(self, default_config):
        groups = group_cells(build_design(default_config), "by_model", default_config)
        assert sorted(len(v) for v in groups.values()) == [132, 132, 132]

    @pytest.mark.parametrize("grouping", GROUPINGS)
    def test_partition_exhaustive_and_disjoint(self, default_config, grouping):
        design = build_design(default_config)
        groups = group_cells(design, grouping, default_config)
        seen = [c.cell_id for cells in groups.values() for c in cells]
        assert sorted(seen) == sorted(c.cell_id for c in design)
        assert len(seen) == len(set(seen))

    @given(n_countries=st.integers(1, 4), n_concepts=st.integers(1, 4),
           n_models=st.integers(1, 3),
           grouping=st.sampled_from(GROUPINGS))
    def test_partition_property_on_small_registries(self, n_countries, n_concepts,
                                                    n_models, grouping):
        cfg = small_config(n_countries, n_concepts, n_models)
        design = build_design(cfg)
        groups = group_cells(design, grouping, cfg)
        seen = sorted(c.cell_id for cells in groups.values() for c in cells)
        assert seen == sorted(c.cell_id for c in design)

    def test_empty_design_rejected(self, default_config):
        with pytest.raises(ConfigError):
            group_cells([], "west_east", default_config)
