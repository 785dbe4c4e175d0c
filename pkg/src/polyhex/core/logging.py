"""基于Logloom的模块化日志系统实现.

为网格流水线的各个阶段提供统一的日志记录功能。
"""

import logging
import os
import tempfile
import traceback
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Union

import logloom_py as ll
import yaml

from .types import ConfigDict


_LEVELS = {
    "DEBUG": 10,
    "INFO": 20,
    "WARN": 30,
    "WARNING": 30,
    "ERROR": 40,
    "FATAL": 50,
    "CRITICAL": 50,
}


def _level_value(level: str) -> int:
    return _LEVELS.get(level.upper(), 20)


@dataclass
class LogConfig:
    """日志配置类 - 兼容Logloom配置格式。"""

    level: str = "INFO"
    language: str = "en"
    file_path: Optional[str] = None
    max_size: int = 10 * 1024 * 1024  # 10MB
    console: bool = True
    module_levels: Dict[str, str] = field(default_factory=dict)

    def to_logloom_config(self) -> Dict[str, Any]:
        """转换为Logloom配置格式。"""
        # 使用最低级别，让单个Logger控制具体级别
        min_level = min(
            [self.level, *self.module_levels.values()], key=_level_value
        )
        log_section: Dict[str, Any] = {
            "level": min_level,
            "console": self.console,
            "format": "[{timestamp}][{level}][{module}] {message}",
            "timestamp_format": "%Y-%m-%d %H:%M:%S",
        }
        if self.file_path:
            log_section["file"] = self.file_path
            log_section["max_size"] = self.max_size
        return {"logloom": {"language": self.language, "log": log_section}}

    def for_module(self, name: str) -> "LogConfig":
        """返回应用了模块级别覆盖后的配置。"""
        level = self.level
        # 前缀匹配: "polyhex.quality" 覆盖其所有子模块
        for prefix, module_level in sorted(self.module_levels.items()):
            if name == prefix or name.startswith(prefix + "."):
                level = module_level
        return LogConfig(
            level=level,
            language=self.language,
            file_path=self.file_path,
            max_size=self.max_size,
            console=self.console,
            module_levels=self.module_levels,
        )


class ModuleLogger:
    """模块化日志记录器 - 基于Logloom实现。"""

    _global_initialized = False

    def __init__(self, name: str, config: Optional[LogConfig] = None):
        """初始化模块日志记录器。

        Args:
            name: 日志记录器名称，通常是模块名。
            config: 日志配置，如果为None则使用默认配置。
        """
        self.name = name
        self.config = config or LogConfig()
        self._logger: Optional[ll.Logger] = None

        # 创建标准logging.Logger以提供兼容性
        self.logger = logging.getLogger(name)
        self.logger.setLevel(_level_value(self.config.level))

        self._ensure_initialized()

    def _ensure_initialized(self) -> None:
        """确保Logloom已初始化。"""
        if not ModuleLogger._global_initialized:
            config_dict = self.config.to_logloom_config()
            # 全局始终使用DEBUG，由各Logger自行过滤
            config_dict["logloom"]["log"]["level"] = "DEBUG"

            with tempfile.NamedTemporaryFile(
                mode="w", suffix=".yaml", delete=False
            ) as f:
                yaml.dump(config_dict, f)
                config_path = f.name

            try:
                try:
                    ll.cleanup()
                except Exception:  # nosec B110
                    pass
                ll.initialize(config_path)
                if self.config.file_path:
                    ll.set_log_file(self.config.file_path)
                    ll.set_log_max_size(self.config.max_size)
                ModuleLogger._global_initialized = True
            finally:
                os.unlink(config_path)

        self._logger = ll.Logger(self.name)

    def _should_log(self, level: str) -> bool:
        """检查是否应该记录指定级别的日志。"""
        return _level_value(level) >= _level_value(self.config.level)

    def _emit(self, level: str, message: str, args: tuple) -> None:
        if self._logger is None or not self._should_log(level):
            return
        formatted = message.format(*args) if args else message
        method = "warn" if level == "WARNING" else level.lower()
        if level == "CRITICAL":
            method = "fatal"
        getattr(self._logger, method)(formatted)

    def debug(self, message: str, *args: Any) -> None:
        """记录调试级别日志。"""
        self._emit("DEBUG", message, args)

    def info(self, message: str, *args: Any) -> None:
        """记录信息级别日志。"""
        self._emit("INFO", message, args)

    def warning(self, message: str, *args: Any) -> None:
        """记录警告级别日志。"""
        self._emit("WARNING", message, args)

    def error(self, message: str, *args: Any) -> None:
        """记录错误级别日志。"""
        self._emit("ERROR", message, args)

    def critical(self, message: str, *args: Any) -> None:
        """记录严重错误级别日志"""
        self._emit("CRITICAL", message, args)

    def exception(self, message: str, *args: Any) -> None:
        """记录异常级别日志，包含堆栈信息"""
        formatted = message.format(*args) if args else message
        exc_info = traceback.format_exc()
        if exc_info and exc_info.strip() != "NoneType: None":
            formatted = f"{formatted}\n{exc_info}"
        self._emit("ERROR", formatted, ())

    def set_level(self, level: str) -> None:
        """设置日志级别"""
        self.config.level = level.upper()
        self.logger.setLevel(_level_value(level))
        if self._logger is not None:
            self._logger.set_level(level.upper())

    def get_effective_level(self) -> str:
        """获取当前有效的日志级别"""
        return self.config.level


class LoggerManager:
    """日志管理器 - 管理多个模块的日志记录器"""

    def __init__(self) -> None:
        self._loggers: Dict[str, ModuleLogger] = {}
        self.default_config = LogConfig()

    @property
    def loggers(self) -> Dict[str, ModuleLogger]:
        return self._loggers

    def get_logger(self, name: str) -> ModuleLogger:
        """获取或创建指定模块的日志记录器"""
        if name not in self._loggers:
            self._loggers[name] = ModuleLogger(
                name, self.default_config.for_module(name)
            )
        return self._loggers[name]

    def configure(self, config: Union[ConfigDict, str]) -> None:
        """配置全局日志设置，接受配置字典或YAML文件路径"""
        if isinstance(config, str):
            with open(config, "r", encoding="utf-8") as f:
                config_dict = yaml.safe_load(f) or {}
        else:
            config_dict = config

        log_config = config_dict.get("logging", {}) or {}
        self.default_config = LogConfig(
            level=str(log_config.get("level", "INFO")).upper(),
            language=log_config.get("language", "en"),
            file_path=log_config.get("file_path"),
            max_size=int(log_config.get("max_size", 10 * 1024 * 1024)),
            console=bool(log_config.get("console", True)),
            module_levels=dict(log_config.get("module_levels", {}) or {}),
        )

        # 重新配置所有现有的日志记录器
        for name, module_logger in self._loggers.items():
            module_config = self.default_config.for_module(name)
            module_logger.config = module_config
            module_logger.logger.setLevel(_level_value(module_config.level))
            module_logger._ensure_initialized()

    def set_level(self, module: str, level: str) -> None:
        """设置特定模块(及其子模块)的日志级别"""
        self.default_config.module_levels[module] = level.upper()
        for name, module_logger in self._loggers.items():
            if name == module or name.startswith(module + "."):
                module_logger.set_level(level)

    def cleanup(self) -> None:
        """清理所有日志记录器"""
        self._loggers.clear()
        try:
            ll.cleanup()
        except Exception:  # nosec B110
            pass
        ModuleLogger._global_initialized = False


# 全局日志管理器实例
_logger_manager = LoggerManager()


def get_logger(name: str) -> ModuleLogger:
    """获取日志记录器的全局函数"""
    return _logger_manager.get_logger(name)


def configure_logging(config: Union[ConfigDict, str]) -> None:
    """配置日志系统的全局函数"""
    _logger_manager.configure(config)


def set_module_level(module: str, level: str) -> None:
    """设置模块日志级别的全局函数"""
    _logger_manager.set_level(module, level)


def cleanup_logging() -> None:
    """清理日志系统的全局函数"""
    _logger_manager.cleanup()


__all__ = [
    "LogConfig",
    "ModuleLogger",
    "LoggerManager",
    "get_logger",
    "configure_logging",
    "set_module_level",
    "cleanup_logging",
]
