"""Config parsing, canonical serialization, and shipped presets."""

import pytest

from gva.config import (KINDS, SCHEMAS, ExperimentConfig, parse_config,
                        parse_config_file, preset_text, serialize_config)
from gva.errors import ConfigError

PRESETS = [
    "bench-averaging", "lqr-cliff", "lqr-marginal", "lqr-marginal-mlp",
    "mean-cliff", "verify-amplification", "verify-cliff", "verify-driftless",
    "verify-dt-ema", "verify-ou",
]


class TestParse:
    def test_minimal_config_uses_defaults(self):
        cfg = parse_config("kind = bench-averaging\n")
        assert cfg.kind == "bench-averaging"
        assert cfg.seed == 0
        assert cfg.out == ""
        assert cfg.params["T"] == 200
        assert cfg.params["suffix_alpha"] == 0.5

    def test_comments_and_blank_lines_ignored(self):
        text = "# a comment\n\nkind = bench-averaging\n  # indented comment\nseed = 3\n"
        assert parse_config(text).seed == 3

    def test_typed_values(self):
        text = ("kind = verify-dt-ema\n"
                "etas = [0.3, 0.1]\n"
                "trials = 500\n"
                "sigma = 2.5\n")
        cfg = parse_config(text)
        assert cfg.params["etas"] == [0.3, 0.1]
        assert cfg.params["trials"] == 500
        assert cfg.params["sigma"] == 2.5

    def test_missing_kind(self):
        with pytest.raises(ConfigError, match="must declare a kind"):
            parse_config("seed = 1\n")

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="unknown experiment kind"):
            parse_config("kind = verify-everything\n")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown keys for bench-averaging"):
            parse_config("kind = bench-averaging\nrate = 3\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate key"):
            parse_config("kind = bench-averaging\nseed = 1\nseed = 2\n")

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="expected 'key = value'"):
            parse_config("kind = bench-averaging\njust words\n")

    def test_empty_value(self):
        with pytest.raises(ConfigError, match="empty key or value"):
            parse_config("kind = bench-averaging\nseed =\n")

    def test_type_errors_name_the_key(self):
        with pytest.raises(ConfigError, match="bench-averaging.trials"):
            parse_config("kind = bench-averaging\ntrials = many\n")
        with pytest.raises(ConfigError, match="expected a real"):
            parse_config("kind = bench-averaging\neta = fast\n")

    def test_array_must_be_numeric_json(self):
        with pytest.raises(ConfigError, match="JSON array"):
            parse_config("kind = verify-dt-ema\netas = 0.3, 0.1\n")
        with pytest.raises(ConfigError, match="numeric array"):
            parse_config('kind = verify-dt-ema\netas = ["a"]\n')

    def test_string_choices_enforced(self):
        with pytest.raises(ConfigError, match="expected one of"):
            parse_config("kind = lqr-marginal\nimitator = transformer\n")
        cfg = parse_config("kind = lqr-marginal\nimitator = mlp\n")
        assert cfg.params["imitator"] == "mlp"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            parse_config_file(tmp_path / "absent.cfg")


class TestSerialize:
    def test_round_trip_identity(self):
        text = ("kind = verify-cliff\nseed = 11\nC = 50.0\ngamma = 0.01\n")
        cfg = parse_config(text)
        again = parse_config(serialize_config(cfg))
        assert again == cfg

    def test_canonical_bytes_are_stable(self):
        cfg = parse_config("kind = verify-ou\nseed = 2\n")
        once = serialize_config(cfg)
        assert serialize_config(parse_config(once)) == once

    def test_keys_sorted_and_kind_first(self):
        cfg = parse_config("kind = bench-averaging\n")
        lines = serialize_config(cfg).splitlines()
        assert lines[0] == "kind = bench-averaging"
        assert lines[1] == "seed = 0"
        params = lines[2:]
        assert params == sorted(params)

    def test_empty_out_is_omitted(self):
        cfg = parse_config("kind = bench-averaging\n")
        assert "out" not in serialize_config(cfg)
        cfg2 = ExperimentConfig(kind="bench-averaging", seed=0, out="results",
                                params=cfg.params)
        assert "out = results" in serialize_config(cfg2)

    def test_every_kind_round_trips_from_defaults(self):
        for kind in KINDS:
            cfg = parse_config(f"kind = {kind}\n")
            assert parse_config(serialize_config(cfg)) == cfg
            assert set(cfg.params) == set(SCHEMAS[kind])


class TestPresets:
    @pytest.mark.parametrize("name", PRESETS)
    def test_preset_parses(self, name):
        cfg = parse_config(preset_text(name))
        assert cfg.kind in KINDS

    def test_unknown_preset_lists_available(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            preset_text("verify-nothing")

    def test_mlp_preset_selects_mlp(self):
        cfg = parse_config(preset_text("lqr-marginal-mlp"))
        assert cfg.kind == "lqr-marginal"
        assert cfg.params["imitator"] == "mlp"
