import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from t2i_audit import build_design
from t2i_audit.coding import (CodingRecord, ParseError, ValidationError,
                              code_with_ensemble, default_scheme,
                              packaged_prompt_text, parse_coder_output,
                              render_coding_prompt, UncodableImageError)
from t2i_audit.mocks import build_mock_providers
from t2i_audit.providers import ProviderGateway, RawCoderOutput
from t2i_audit.store import CODING_LOG

FIXTURES = Path(__file__).parent / "fixtures"


def raw(text, cell="usa--women--midjourney", coder="c1"):
    return RawCoderOutput(cell_id=cell, coder_id=coder, raw_text=text)


class TestScheme:
    def test_five_dimensions_in_order(self, scheme):
        assert scheme.dimension_ids == ("political_symbols", "cultural_symbols",
                                        "flag_appearance", "sovereignty", "modernity")

    def test_bounds(self, scheme):
        assert scheme.dimension("flag_appearance").max == 4
        assert scheme.dimension("sovereignty").max == 1
        assert scheme.dimension("modernity").min == 1
        assert scheme.dimension("modernity").max == 5
        assert scheme.dimension("political_symbols").max is None

    def test_measurement_levels(self, scheme):
        assert scheme.dimension("political_symbols").measurement_level == "interval"
        assert scheme.dimension("flag_appearance").measurement_level == "ordinal"
        assert scheme.dimension("sovereignty").measurement_level == "nominal"


class TestPromptVersioning:
    def test_rendered_prompt_contains_counting_rule(self, scheme, store):
        text = render_coding_prompt(scheme, "v1", store)
        assert "If you see 3 flags, count 3 (not 1)" in text

    def test_two_renders_identical(self, scheme, store):
        assert render_coding_prompt(scheme, "v1", store) == \
            render_coding_prompt(scheme, "v1", store)

    def test_unknown_version_raises(self, scheme, store):
        with pytest.raises(KeyError):
            render_coding_prompt(scheme, "no-such-version", store)

    def test_registering_same_version_different_bytes_fails(self, store):
        store.register_prompt_version("v2", "text one")
        store.register_prompt_version("v2", "text one")   # identical re-register ok
        from t2i_audit.store import StoreError
        with pytest.raises(StoreError):
            store.register_prompt_version("v2", "text two")

    def test_store_registry_overrides_package(self, scheme, store):
        refined = packaged_prompt_text("v1") + "\nAddendum: judge flags strictly."
        store.register_prompt_version("v1.1", refined)
        assert render_coding_prompt(scheme, "v1.1", store).endswith("strictly.")

    def test_prompt_mentions_every_dimension(self, scheme, store):
        text = render_coding_prompt(scheme, "v1", store)
        for dim in scheme.dimension_ids:
            assert dim in text


class TestParseCoderOutput:
    def test_identity_parse(self, scheme):
        rec = parse_coder_output(raw(json.dumps({
            "political_symbols": 3, "cultural_symbols": 1, "flag_appearance": 2,
            "sovereignty": 1, "modernity": 4, "confidence": 0.9,
            "political_symbols_list": ["flag", "flag", "capitol"],
            "cultural_symbols_list": ["lantern"],
            "reasoning": "because",
        })), scheme)
        assert rec.valid
        assert rec.codes() == {"political_symbols": 3, "cultural_symbols": 1,
                               "flag_appearance": 2, "sovereignty": 1, "modernity": 4}
        assert rec.confidence == 0.9
        assert rec.political_symbols_list == ("flag", "flag", "capitol")

    def test_out_of_range_names_dimension(self, scheme):
        with pytest.raises(ValidationError) as err:
            parse_coder_output(raw(json.dumps({
                "political_symbols": 1, "cultural_symbols": 1, "flag_appearance": 7,
                "sovereignty": 0, "modernity": 3})), scheme)
        assert err.value.dimensions == ["flag_appearance"]

    def test_missing_dimension_named(self, scheme):
        with pytest.raises(ValidationError) as err:
            parse_coder_output(raw(json.dumps({
                "political_symbols": 1, "cultural_symbols": 1,
                "flag_appearance": 1, "sovereignty": 0})), scheme)
        assert err.value.dimensions == ["modernity"]

    def test_wrapped_output_corpus(self, scheme):
        corpus = json.loads((FIXTURES / "wrapped_outputs.json").read_text())
        canonical = corpus["canonical"]
        assert len(corpus["wrappers"]) == 20
        for wrapper in corpus["wrappers"]:
            rec = parse_coder_output(raw(wrapper), scheme)
            assert rec.valid
            for dim, value in canonical.items():
                if dim == "confidence":
                    assert rec.confidence == value
                else:
                    assert rec.code(dim) == value

    def test_no_json_raises_parse_error(self, scheme):
        with pytest.raises(ParseError):
            parse_coder_output(raw("there is no json here"), scheme)
        with pytest.raises(ParseError):
            parse_coder_output(raw("  "), scheme)

    def test_missing_confidence_defaults_to_half_for_vlm(self, scheme):
        rec = parse_coder_output(raw(json.dumps({
            "political_symbols": 0, "cultural_symbols": 0, "flag_appearance": 0,
            "sovereignty": 0, "modernity": 1})), scheme)
        assert rec.confidence == 0.5

    def test_missing_confidence_defaults_to_one_for_human(self, scheme):
        rec = parse_coder_output(raw(json.dumps({
            "political_symbols": 0, "cultural_symbols": 0, "flag_appearance": 0,
            "sovereignty": 0, "modernity": 1})), scheme, coder_kind="human")
        assert rec.confidence == 1.0

    def test_never_clamps(self, scheme):
        with pytest.raises(ValidationError):
            parse_coder_output(raw(json.dumps({
                "political_symbols": -2, "cultural_symbols": 0, "flag_appearance": 0,
                "sovereignty": 0, "modernity": 1})), scheme)

    @given(political=st.integers(0, 50), cultural=st.integers(0, 50),
           flag=st.integers(0, 4), sovereignty=st.integers(0, 1),
           modernity=st.integers(1, 5),
           confidence=st.floats(0, 1, allow_nan=False))
    def test_roundtrip_preserves_codes(self, scheme, political, cultural, flag,
                                       sovereignty, modernity, confidence):
        doc = {"political_symbols": political, "cultural_symbols": cultural,
               "flag_appearance": flag, "sovereignty": sovereignty,
               "modernity": modernity, "confidence": confidence}
        rec = parse_coder_output(raw(json.dumps(doc)), scheme)
        reparsed = parse_coder_output(raw(json.dumps(rec.codes())), scheme)
        assert reparsed.codes() == rec.codes()

    def test_validation_total_over_arbitrary_text(self, scheme):
        # every raw output lands in exactly one bucket
        outcomes = set()
        for text in ("", "prose only", '{"political_symbols": 1}',
                     '{"political_symbols": 1, "cultural_symbols": 0, '
                     '"flag_appearance": 0, "sovereignty": 0, "modernity": 3}'):
            try:
                rec = parse_coder_output(raw(text), scheme)
                outcomes.add("valid" if rec.valid else "invalid")
            except ParseError:
                outcomes.add("parse_error")
            except ValidationError:
                outcomes.add("validation_error")
        assert outcomes == {"parse_error", "validation_error", "valid"}


class GarbageCoder:
    def code(self, cell, image_bytes, prompt_text):
        return "no json, twice in a row"


class TestEnsemble:
    def _gateway(self, store, config, override=None):
        images, coders = build_mock_providers(config)
        if override:
            coders.update(override)
        return ProviderGateway(store, config, images, coders, sleep=lambda _s: None)

    def _image(self, gateway, config):
        cell = build_design(config)[0]
        return gateway.generate_image(cell, "p", config.model(cell.model))

    def test_four_mock_coders_give_four_valid_records(self, store, seeded_config, scheme):
        gateway = self._gateway(store, seeded_config)
        image = self._image(gateway, seeded_config)
        records = code_with_ensemble(gateway, image, list(seeded_config.coders),
                                     scheme, "v1")
        assert len(records) == 4
        assert all(r.valid for r in records)
        assert len(list(store.read_log(CODING_LOG))) == 4

    def test_garbage_coder_yields_invalid_record(self, store, seeded_config, scheme):
        bad = seeded_config.coders[0].id
        gateway = self._gateway(store, seeded_config, {bad: GarbageCoder()})
        image = self._image(gateway, seeded_config)
        records = code_with_ensemble(gateway, image, list(seeded_config.coders),
                                     scheme, "v1")
        by_valid = {r.coder_id: r.valid for r in records}
        assert by_valid[bad] is False
        assert sum(by_valid.values()) == 3
        # re-prompt-once: two raw outputs logged for the garbage coder
        raws = [r for r in store.read_log("raw_outputs.jsonl") if r["coder_id"] == bad]
        assert len(raws) == 2

    def test_all_garbage_flags_uncodable(self, store, seeded_config, scheme):
        override = {c.id: GarbageCoder() for c in seeded_config.coders}
        gateway = self._gateway(store, seeded_config, override)
        image = self._image(gateway, seeded_config)
        with pytest.raises(UncodableImageError):
            code_with_ensemble(gateway, image, list(seeded_config.coders), scheme, "v1")
        events = [e["event"] for e in store.read_log("audit.jsonl")]
        assert "uncodable_image" in events

    def test_fewer_than_two_coders_rejected(self, store, seeded_config, scheme):
        gateway = self._gateway(store, seeded_config)
        image = self._image(gateway, seeded_config)
        with pytest.raises(ValueError):
            code_with_ensemble(gateway, image, [seeded_config.coders[0]], scheme, "v1")
