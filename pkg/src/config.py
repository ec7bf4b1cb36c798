# src/config.py
import os
from functools import lru_cache
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv

PROJECT_ROOT = Path(__file__).resolve().parent.parent
CONFIG_PATH = PROJECT_ROOT / "config" / "config.yaml"
ENV_PATH = PROJECT_ROOT / ".env"


def reload_env_vars():
    """Перезагружает переменные окружения из .env файла (если он есть)"""
    load_dotenv(dotenv_path=ENV_PATH, override=False)


reload_env_vars()


@lru_cache(maxsize=1)
def load_config(path: str = str(CONFIG_PATH)) -> dict:
    """
    Загружает YAML-конфигурацию проекта.

    Parameters:
    -----------
    path : str
        Путь к config.yaml

    Returns:
    --------
    dict
        Словарь со значениями по умолчанию
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Файл конфигурации {path} не найден.")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    return data or {}


CONFIG = load_config()


def get_config(key: str, default: Any = None) -> Any:
    """Получить значение по пути вида "training.epochs" или вернуть значение по умолчанию"""
    current: Any = CONFIG
    for part in key.split("."):
        if isinstance(current, dict) and part in current:
            current = current[part]
        else:
            return default
    return current


def get_full_path(relative_path: str) -> str:
    """Получить полный путь к файлу относительно корня проекта"""
    return str(PROJECT_ROOT / relative_path)


class Settings:
    """Параметры окружения. Значения читаются при каждом обращении."""

    @property
    def JOBS(self) -> int | None:
        raw = os.getenv("NDT_SELECT_JOBS", "").strip()
        if not raw:
            return None
        try:
            value = int(raw)
        except ValueError:
            return None
        return value if value >= 1 else None

    @property
    def LOG_FILE(self) -> str:
        return os.getenv("NDT_SELECT_LOG_FILE") or get_full_path(get_config("logging.log_file", "logs/app.log"))


settings = Settings()
