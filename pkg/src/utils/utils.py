# src/utils/utils.py
import logging
import os
import sys
from logging.handlers import RotatingFileHandler

from src.config import get_config, settings


def setup_logger(level: str | None = None, log_file: str | None = None, console: bool = True) -> None:
    """
    Настраивает корневой логгер: файл с ротацией + консоль (stderr).

    Stdout оставлен для итоговой строки с результатами, поэтому консольный
    обработчик пишет в stderr. Команды CLI включают консоль только с --verbose:
    при ошибке в stderr должна быть ровно одна строка error=...

    Parameters:
    -----------
    level : str, optional
        Уровень логирования ("DEBUG", "INFO", ...). По умолчанию из config.yaml
    log_file : str, optional
        Путь к лог-файлу. По умолчанию NDT_SELECT_LOG_FILE или logging.log_file
    console : bool
        Добавлять ли обработчик stderr
    """
    level = (level or get_config("logging.level", "INFO")).upper()
    log_file = log_file or settings.LOG_FILE

    log_dir = os.path.dirname(log_file)
    if log_dir and not os.path.exists(log_dir):
        os.makedirs(log_dir, exist_ok=True)

    logger = logging.getLogger()
    logger.handlers = []
    formatter = logging.Formatter(
        "%(asctime)s [%(levelname)s] %(module)s.%(funcName)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )
    file_handler = RotatingFileHandler(
        log_file,
        maxBytes=int(get_config("logging.max_bytes", 10_000_000)),
        backupCount=int(get_config("logging.backup_count", 5)),
        encoding="utf-8"
    )
    file_handler.setFormatter(formatter)
    logger.setLevel(getattr(logging, level, logging.INFO))
    logger.addHandler(file_handler)
    if console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)
    # предупреждения библиотек (warnings) идут в те же обработчики
    logging.captureWarnings(True)
    logging.debug(f"Логгер настроен: уровень={level}, файл={log_file}")
