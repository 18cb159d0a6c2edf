"""Config parsing, validation, typed access, and the shipped presets."""

import pytest

from srwec import ValidationError
from srwec.config import (
    PRESETS,
    RunConfig,
    SCHEMA,
    describe_keys,
    load_preset,
    resolve_config,
)

INI = """\
[sea]
hs_m = 2.5
tp_s = 8.7

[pto]
kind = discrete
f_max_n = 1000
"""

JSON_TEXT = """\
{"sea": {"hs_m": 2.5, "tp_s": 8.7}, "pto": {"kind": "discrete", "f_max_n": 1000}}
"""


class TestParsing:
    def test_ini_sections_and_values(self):
        cfg = RunConfig.parse(INI)
        assert cfg.get("sea", "hs_m") == "2.5"
        assert cfg.get_str("pto", "kind") == "discrete"

    def test_round_trip_unchanged(self):
        cfg = RunConfig.parse(INI)
        assert RunConfig.parse(cfg.emit()) == cfg

    def test_json_equals_ini(self):
        assert RunConfig.parse(JSON_TEXT) == RunConfig.parse(INI)

    def test_unknown_section_rejected(self):
        with pytest.raises(ValidationError, match="unknown config section"):
            RunConfig.parse("[nope]\nx = 1\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError, match="unknown key"):
            RunConfig.parse("[sea]\nheight = 2\n")

    def test_malformed_ini_rejected(self):
        with pytest.raises(ValidationError, match="bad config"):
            RunConfig.parse("hs_m = 2.5\n")

    def test_malformed_json_rejected(self):
        with pytest.raises(ValidationError, match="bad JSON"):
            RunConfig.parse('{"sea": ')

    def test_json_must_be_sectioned(self):
        with pytest.raises(ValidationError):
            RunConfig.parse('{"hs_m": 2.5}')

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="cannot read"):
            RunConfig.from_file(tmp_path / "absent.ini")


class TestOverrides:
    def test_set_and_add(self):
        cfg = RunConfig.parse(INI).with_overrides(
            ["sea.hs_m=3.0", "body.mass_kg=300"])
        assert cfg.get_float("sea", "hs_m") == 3.0
        assert cfg.get_float("body", "mass_kg") == 300.0
        assert cfg.get("sea", "tp_s") == "8.7"

    def test_bad_syntax_rejected(self):
        for bad in ("sea.hs_m", "hs_m=3", "=3", "sea.=3"):
            with pytest.raises(ValidationError):
                RunConfig().with_overrides([bad])

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            RunConfig().with_overrides(["sea.depth_m=40"])


class TestTypedAccess:
    def test_defaults_when_absent(self):
        cfg = RunConfig()
        assert cfg.get_float("sea", "hs_m") is None
        assert cfg.get_float("sea", "hs_m", 1.5) == 1.5
        assert cfg.get_floats("sweep", "f_grid_n", (500.0,)) == (500.0,)

    def test_bad_number_reports_key(self):
        cfg = RunConfig.parse("[sea]\nhs_m = tall\n")
        with pytest.raises(ValidationError, match="sea.hs_m"):
            cfg.get_float("sea", "hs_m")

    def test_int_and_int_list(self):
        cfg = RunConfig.parse("[geom]\npoles = 8\n[sweep]\npoles_grid = 4, 8\n")
        assert cfg.get_int("geom", "poles") == 8
        assert cfg.get_ints("sweep", "poles_grid") == (4, 8)

    def test_float_list(self):
        cfg = RunConfig.parse("[sweep]\nf_grid_n = 500, 1000, 1500\n")
        assert cfg.get_floats("sweep", "f_grid_n") == (500.0, 1000.0, 1500.0)

    def test_get_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            RunConfig().get("sea", "nope")


class TestPresets:
    def test_all_presets_load(self):
        for name in PRESETS:
            assert isinstance(load_preset(name), RunConfig)

    def test_fullscale_values(self):
        cfg = load_preset("fullscale")
        assert cfg.get_str("pto", "kind") == "discrete"
        assert cfg.get_float("pto", "f_max_n") == 1000.0
        assert cfg.get_float("body", "mass_kg") == 300.0
        assert cfg.get_float("geom", "tau_p_mm") == 37.5
        assert cfg.get_int("winding", "turns") == 90

    def test_prototype_values(self):
        cfg = load_preset("prototype")
        assert cfg.get_float("circuit", "r_phase_ohm") == 33.6
        assert cfg.get_float("circuit", "l_phase_h") == 0.022
        assert cfg.get_float("circuit", "stroke_m") == 0.6858
        assert cfg.get_int("geom", "poles") == 12
        assert cfg.get_int("winding", "turns") == 70

    def test_seastates_match_bundled_table(self):
        from srwec.sweep import representative_sea_states

        cfg = load_preset("paper-seastates")
        hs = cfg.get_floats("sea", "hs_list_m")
        tp = cfg.get_floats("sea", "tp_list_s")
        seas = representative_sea_states()
        assert len(hs) == len(tp) == len(seas) == 11
        for h, t, sea in zip(hs, tp, seas):
            assert h == pytest.approx(sea.hs, rel=1e-9)
            assert t == pytest.approx(sea.tp, rel=1e-9)

    def test_unknown_preset(self):
        with pytest.raises(ValidationError, match="unknown preset"):
            load_preset("labscale")


class TestResolve:
    def test_path_wins_over_preset(self, tmp_path):
        path = tmp_path / "fullscale"
        path.write_text("[sea]\nhs_m = 9\n")
        assert resolve_config(str(path)).get("sea", "hs_m") == "9"

    def test_preset_name(self):
        assert resolve_config("prototype").get_int("geom", "poles") == 12

    def test_neither(self):
        with pytest.raises(ValidationError, match="neither"):
            resolve_config("no-such-thing")


def test_describe_covers_every_key():
    text = describe_keys()
    for section, keys in SCHEMA.items():
        for key in keys:
            assert f"{section}.{key}" in text
