"""
配置、消息目录与日志配置测试
"""

from pathlib import Path

import pytest
from pydantic import ValidationError

from polyhex.core import ConfigError, PipelineConfig
from polyhex.core.i18n import I18nConfig, TranslationManager
from polyhex.core.logging import LogConfig, LoggerManager, ModuleLogger

REPO_CONFIG = Path(__file__).resolve().parents[1] / "config" / "pipeline.yaml"


class TestPipelineConfig:
    def test_defaults(self):
        cfg = PipelineConfig()
        assert cfg.hex.level == 3
        assert cfg.train.optimizer == "adam"
        assert cfg.centroid_train.optimizer == "rmsprop"
        assert cfg.paths.lambda0_sharp > cfg.paths.lambda0_smooth

    def test_repository_config_loads(self):
        cfg = PipelineConfig.from_yaml(REPO_CONFIG)
        assert cfg.quality.pillow is True
        assert cfg.output == Path("out/hex.vtk")

    def test_pipeline_section(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("pipeline:\n  hex:\n    level: 2\nlogging:\n  level: DEBUG\n")
        assert PipelineConfig.from_yaml(path).hex.level == 2

    def test_bare_document_ignores_logging(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("seed: 7\nlogging:\n  level: DEBUG\n")
        assert PipelineConfig.from_yaml(path).seed == 7

    def test_empty_document(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("")
        assert PipelineConfig.from_yaml(path) == PipelineConfig()

    def test_unknown_field_rejected(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("pipeline:\n  hex:\n    depth: 2\n")
        with pytest.raises(ValidationError):
            PipelineConfig.from_yaml(path)

    def test_overrides(self):
        cfg = PipelineConfig().with_overrides(["hex.level=4", "quality.pillow=false", "seed=9"])
        assert cfg.hex.level == 4
        assert cfg.quality.pillow is False
        assert cfg.seed == 9

    @pytest.mark.parametrize("item", ["hex.depth=2", "nothing.level=1", "hex.level.x=1"])
    def test_unknown_override(self, item):
        with pytest.raises(ConfigError) as err:
            PipelineConfig().with_overrides([item])
        assert err.value.code == "UNKNOWN_KEY"

    @pytest.mark.parametrize("item", ["hex.level", "=3"])
    def test_malformed_override(self, item):
        with pytest.raises(ConfigError) as err:
            PipelineConfig().with_overrides([item])
        assert err.value.code == "INVALID_OVERRIDE"

    def test_out_of_range_override(self):
        with pytest.raises(ValidationError):
            PipelineConfig().with_overrides(["hex.level=9"])


class TestMessages:
    def test_english_default(self):
        tm = TranslationManager()
        assert tm.get_text("errors.config.unknown_key", key="a.b") == "unknown configuration key: a.b"

    def test_chinese(self):
        tm = TranslationManager(I18nConfig(default_locale="zh_CN"))
        assert tm.get_text("errors.config.unknown_key", key="a.b") == "未知的配置键：a.b"

    def test_missing_key_returns_key(self):
        assert TranslationManager().get_text("no.such.key") == "no.such.key"

    def test_unknown_locale_falls_back(self):
        tm = TranslationManager()
        tm.set_locale("fr_FR")
        assert tm.get_text("messages.stage_started", stage="load") == "stage load started"

    def test_available_locales(self):
        assert TranslationManager().get_available_locales() == ["en_US", "zh_CN"]


class TestLogConfig:
    def test_module_prefix_override(self):
        cfg = LogConfig(level="WARNING", module_levels={"polyhex.quality": "DEBUG"})
        assert cfg.for_module("polyhex.quality.optimize").level == "DEBUG"
        assert cfg.for_module("polyhex.qualityx").level == "WARNING"
        assert cfg.for_module("polyhex.gcn").level == "WARNING"

    def test_logloom_section(self):
        cfg = LogConfig(level="INFO", file_path="run.log", module_levels={"a": "DEBUG"})
        section = cfg.to_logloom_config()["logloom"]["log"]
        assert section["level"] == "DEBUG"
        assert section["file"] == "run.log"

    def test_manager_reads_logging_section(self):
        manager = LoggerManager()
        manager.configure({"logging": {"level": "error", "module_levels": {"x": "DEBUG"}}})
        assert manager.get_logger("x.y").get_effective_level() == "DEBUG"
        assert manager.get_logger("z").get_effective_level() == "ERROR"

    def test_loggers_are_backed_by_logloom(self):
        manager = LoggerManager()
        logger = manager.get_logger("polyhex.test")
        assert logger._logger is not None
        assert ModuleLogger._global_initialized
        logger.info("logloom backend")
