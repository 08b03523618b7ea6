import json
from pathlib import Path

import pytest

from powergames.config import load_config, parse_config
from powergames.errors import ConfigError

CONFIG_DIR = Path(__file__).parent.parent / "configs"


class TestLoad:
    def test_paper_setup_loads_cleanly(self):
        cfg = load_config(CONFIG_DIR / "paper_setup.json")
        assert cfg.players == 2
        assert cfg.power.levels == 25
        assert cfg.power.min_db == -20.0
        assert cfg.channel.grid.points == 10
        assert cfg.channel.grid.min == 0.01
        assert cfg.channel.grid.max == 3.0
        assert cfg.packet_len == 100
        assert cfg.types.enabled and cfg.types.points == 2
        assert cfg.sweep.action_levels == (2, 3, 4)

    def test_demo_configs_load(self):
        for name in ("region_demo.json", "dominant_demo.json"):
            cfg = load_config(CONFIG_DIR / name)
            assert cfg.players == 2

    def test_empty_file(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("")
        with pytest.raises(ConfigError, match="line 1"):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.json")

    def test_negative_alpha_names_field(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({
            "channel": {"matrix": [[1.0, 0.5], [0.5, 1.0]]},
            "alpha": -1,
        }))
        with pytest.raises(ConfigError, match="alpha"):
            load_config(p)

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({
            "channel": {"matrix": [[1.0, 0.5], [0.5, 1.0]]},
            "alhpa": 0.01,
        }))
        with pytest.raises(ConfigError, match="alhpa"):
            load_config(p)

    def test_nested_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="channel.sweep"):
            parse_config({
                "channel": {"matrix": [[1.0, 0.5], [0.5, 1.0]],
                            "sweep": {"Mode": "sample"}},
            })


class TestValidation:
    def base(self):
        return {"channel": {"matrix": [[1.0, 0.5], [0.5, 1.0]]}}

    def test_channel_required(self):
        with pytest.raises(ConfigError, match="channel"):
            parse_config({})

    def test_matrix_shape(self):
        with pytest.raises(ConfigError, match="channel.matrix"):
            parse_config({"channel": {"matrix": [[1.0, 0.5]]}})

    def test_matrix_negative_gain(self):
        with pytest.raises(ConfigError, match="channel.matrix"):
            parse_config({"channel": {"matrix": [[1.0, -0.5], [0.5, 1.0]]}})

    def test_grid_inverted(self):
        with pytest.raises(ConfigError, match="channel.grid.min"):
            parse_config({"channel": {"grid": {"min": 3.0, "max": 0.01}}})

    def test_bad_sweep_mode(self):
        with pytest.raises(ConfigError, match="channel.sweep.mode"):
            parse_config({"channel": {"matrix": [[1.0, 0.5], [0.5, 1.0]],
                                      "sweep": {"mode": "all"}}})

    def test_bad_levels(self):
        raw = self.base()
        raw["power"] = {"levels": 0}
        with pytest.raises(ConfigError, match="power.levels"):
            parse_config(raw)

    def test_levels_linear_must_increase(self):
        raw = self.base()
        raw["power"] = {"levels_linear": [2.0, 1.0]}
        with pytest.raises(ConfigError, match="levels_linear"):
            parse_config(raw)

    def test_bad_rule(self):
        raw = self.base()
        raw["learning"] = {"rule": "magic"}
        with pytest.raises(ConfigError, match="learning.rule"):
            parse_config(raw)

    def test_defaults_recorded(self):
        cfg = parse_config(self.base())
        resolved = cfg.resolved()
        assert resolved["alpha"] == 0.01
        assert resolved["noise"] == 1.0
        assert resolved["packet_len"] == 100
        assert resolved["solver"]["directions"] == 64
        assert resolved["learning"]["steps"] == 100_000

    def test_hash_stable_and_sensitive(self):
        a = parse_config(self.base())
        b = parse_config(self.base())
        assert a.sha256() == b.sha256()
        raw = self.base()
        raw["alpha"] = 0.02
        c = parse_config(raw)
        assert c.sha256() != a.sha256()
