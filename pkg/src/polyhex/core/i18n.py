"""国际化(i18n)支持系统.

错误信息与命令行输出的消息目录，默认英文，可切换中文。
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

_PACKAGE_LOCALES = Path(__file__).resolve().parent.parent / "locales"


@dataclass
class I18nConfig:
    """国际化配置。"""

    default_locale: str = "en_US"
    fallback_locale: str = "en_US"
    locale_dir: Path = field(default_factory=lambda: _PACKAGE_LOCALES)


class TranslationManager:
    """翻译管理器。"""

    def __init__(self, config: Optional[I18nConfig] = None):
        self.config = config or I18nConfig()
        self.current_locale = self.config.default_locale
        self.translations: Dict[str, Dict[str, Any]] = {}
        self.fallback_translations: Dict[str, Any] = {}
        self._load_translations()

    def _read(self, locale: str) -> Dict[str, Any]:
        path = Path(self.config.locale_dir) / f"{locale}.json"
        if not path.exists():
            return {}
        with open(path, "r", encoding="utf-8") as f:
            data: Dict[str, Any] = json.load(f)
        return data

    def _load_translations(self) -> None:
        """加载当前语言与回退语言的翻译文件。"""
        self.translations[self.current_locale] = self._read(self.current_locale)
        self.fallback_translations = self._read(self.config.fallback_locale)

    def set_locale(self, locale: str) -> None:
        """设置当前语言。"""
        self.current_locale = locale
        if locale not in self.translations:
            self.translations[locale] = self._read(locale)

    def get_text(self, key: str, **kwargs: Any) -> str:
        """获取翻译文本。

        Args:
            key: 翻译键，使用点号分隔，如 'errors.mesh.non_triangle_face'
            **kwargs: 格式化参数

        Returns:
            翻译后的文本；当前语言与回退语言都缺失时返回键名
        """
        keys = key.split(".")
        text = self._get_nested_value(
            self.translations.get(self.current_locale, {}), keys
        )
        if text is None:
            text = self._get_nested_value(self.fallback_translations, keys)
        if text is None:
            text = key

        try:
            return text.format(**kwargs)
        except (KeyError, IndexError, ValueError):
            return text

    @staticmethod
    def _get_nested_value(data: Dict[str, Any], keys: List[str]) -> Optional[str]:
        current: Any = data
        for key in keys:
            if isinstance(current, dict) and key in current:
                current = current[key]
            else:
                return None
        return current if isinstance(current, str) else None

    def get_available_locales(self) -> List[str]:
        """获取可用的语言列表。"""
        locale_dir = Path(self.config.locale_dir)
        if not locale_dir.exists():
            return [self.config.default_locale]
        return sorted(p.stem for p in locale_dir.glob("*.json"))


# 全局翻译管理器实例
_translation_manager = TranslationManager()


def set_locale(locale: str) -> None:
    """设置当前语言的便捷函数。"""
    _translation_manager.set_locale(locale)


def get_text(key: str, **kwargs: Any) -> str:
    """获取翻译文本的便捷函数。"""
    return _translation_manager.get_text(key, **kwargs)


def _(key: str, **kwargs: Any) -> str:
    """获取翻译文本的简短别名。"""
    return get_text(key, **kwargs)


def configure_i18n(config: I18nConfig) -> None:
    """配置国际化系统。"""
    global _translation_manager
    _translation_manager = TranslationManager(config)


def get_available_locales() -> List[str]:
    """获取可用语言列表。"""
    return _translation_manager.get_available_locales()
