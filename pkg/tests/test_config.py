"""Tests for environment settings and experiment configs."""

from pathlib import Path

import pytest

from offline_zsg.config import ExperimentConfig, get_settings, reload_settings
from offline_zsg.utils.exceptions import ConfigurationError


class TestSettings:
    def test_defaults(self):
        settings = get_settings()
        assert settings.seed == 0
        assert settings.delta == 0.05
        assert settings.rng_bit_generator == "philox"
        assert settings.get_log_file_path() is None

    def test_env_prefix(self, monkeypatch):
        monkeypatch.setenv("OFFLINE_ZSG_SEED", "42")
        monkeypatch.setenv("OFFLINE_ZSG_LOG_LEVEL", "debug")
        monkeypatch.setenv("OFFLINE_ZSG_BERNSTEIN_C", "0.5")
        settings = reload_settings()
        assert settings.seed == 42
        assert settings.log_level == "DEBUG"
        assert settings.bernstein_c == 0.5

    def test_dotenv(self, tmp_path):
        (tmp_path / ".env").write_text("OFFLINE_ZSG_WORKERS=3\n", encoding="utf-8")
        assert reload_settings().workers == 3

    @pytest.mark.parametrize(
        "name, value",
        [
            ("OFFLINE_ZSG_LOG_LEVEL", "LOUD"),
            ("OFFLINE_ZSG_DELTA", "1.5"),
            ("OFFLINE_ZSG_RNG_BIT_GENERATOR", "mt19937"),
            ("OFFLINE_ZSG_WORKERS", "0"),
        ],
    )
    def test_invalid_values(self, monkeypatch, name, value):
        monkeypatch.setenv(name, value)
        with pytest.raises(ConfigurationError):
            reload_settings()

    def test_log_file_path(self, monkeypatch):
        monkeypatch.setenv("OFFLINE_ZSG_LOG_FILE", "~/runs/zsg.log")
        path = reload_settings().get_log_file_path()
        assert path == Path("~/runs/zsg.log").expanduser()


class TestExperimentConfig:
    def test_defaults_follow_settings(self, monkeypatch):
        monkeypatch.setenv("OFFLINE_ZSG_SEED", "7")
        monkeypatch.setenv("OFFLINE_ZSG_HOEFFDING_CONSTANT", "2.0")
        reload_settings()
        config = ExperimentConfig.from_mapping({"game": "hardness1", "n_grid": [10, 20]})
        assert config.seeds == [7]
        assert config.hoeffding_constant == 2.0
        assert config.algorithms() == ["hoeffding", "bernstein"]

    def test_bonus_scales(self):
        config = ExperimentConfig.from_mapping(
            {"game": "hardness1", "n_grid": [10], "c_sensitivity": [0.25, 1.0, 4.0], "hoeffding_sensitivity": [1.0]}
        )
        assert config.bonus_scales("bernstein") == [1.0, 0.25, 4.0]
        assert config.bonus_scales("hoeffding") == [4.0, 1.0]

    @pytest.mark.parametrize(
        "override",
        [
            {"n_grid": [10, 10]},
            {"n_grid": [0, 10]},
            {"n_grid": []},
            {"seeds": []},
            {"seeds": [-1]},
            {"delta": 0.0},
            {"c_sensitivity": [0.0]},
            {"algorithm": "minimax"},
            {"unknown": 1},
        ],
    )
    def test_invalid(self, override):
        raw = {"game": "hardness1", "n_grid": [10, 100]}
        raw.update(override)
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_mapping(raw)

    def test_with_overrides_ignores_none(self):
        config = ExperimentConfig.from_mapping({"game": "hardness1", "n_grid": [10], "seeds": [1, 2]})
        updated = config.with_overrides(seeds=None, n_grid=[10, 50], workers=2)
        assert updated.seeds == [1, 2]
        assert updated.n_grid == [10, 50]
        assert updated.workers == 2
        assert config.n_grid == [10]

    def test_from_file(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text('{"game": {"generator": "hardness2"}, "n_grid": [10, 100], "algorithm": "bernstein"}')
        config = ExperimentConfig.from_file(path)
        assert config.game == {"generator": "hardness2"}
        assert config.algorithms() == ["bernstein"]

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"game": "hardness1",\n "n_grid": [10,\n}')
        with pytest.raises(ConfigurationError, match="line 3"):
            ExperimentConfig.from_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_file(tmp_path / "absent.json")
