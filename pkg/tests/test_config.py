"""Config file parsing and typed section access."""

import pytest

from synthaction.config import ConfigError, REQUIRED, SectionReader, \
    parse_config_text


class TestParsing:
    def test_sections_and_values(self):
        text = """
        # a comment
        [dataset]
        test_fraction = 0.25

        [real_like]
        classes = wave, jump, punch:2
        videos_per_class = 12
        """
        sections = parse_config_text(text)
        assert sections["dataset"]["test_fraction"] == "0.25"
        assert sections["real_like"]["classes"] == "wave, jump, punch:2"

    def test_key_outside_section_rejected(self):
        with pytest.raises(ConfigError, match="outside"):
            parse_config_text("alpha = 2\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config_text("[a]\nnonsense\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate key"):
            parse_config_text("[a]\nx = 1\nx = 2\n")

    def test_duplicate_section_rejected(self):
        with pytest.raises(ConfigError, match="duplicate section"):
            parse_config_text("[a]\n[a]\n")


class TestSectionReader:
    def test_typed_getters(self):
        sec = SectionReader("s", {"n": "3", "x": "1.5", "items": "a, b, c",
                                  "pair": "2.0, 4.0"})
        assert sec.get_int("n") == 3
        assert sec.get_float("x") == 1.5
        assert sec.get_list("items") == ["a", "b", "c"]
        assert sec.get_pair("pair") == (2.0, 4.0)
        sec.finish()

    def test_unknown_keys_are_errors(self):
        sec = SectionReader("s", {"known": "1", "mystery": "2"})
        sec.get_int("known")
        with pytest.raises(ConfigError, match="mystery"):
            sec.finish()

    def test_missing_required(self):
        sec = SectionReader("s", {})
        with pytest.raises(ConfigError, match="required"):
            sec.get_str("must_have", REQUIRED)

    def test_bad_int(self):
        sec = SectionReader("s", {"n": "three"})
        with pytest.raises(ConfigError, match="integer"):
            sec.get_int("n")

    def test_defaults_pass_through(self):
        sec = SectionReader("s", {})
        assert sec.get_int("n", 7) == 7
        assert sec.get_list("xs", [1, 2]) == [1, 2]
        sec.finish()
