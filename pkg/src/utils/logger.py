"""
Logging de vidsum : logger coloré console + fichier quotidien,
et journaux JSON Lines (une ligne par epoch, par vidéo évaluée, ...)
"""

import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

import colorlog

from config import settings


CONSOLE_FORMAT = "%(log_color)s%(asctime)s | %(levelname)-8s | %(name)s | %(message)s%(reset)s"
FILE_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(funcName)s:%(lineno)d | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

LOG_COLORS = {
    'DEBUG': 'cyan',
    'INFO': 'green',
    'WARNING': 'yellow',
    'ERROR': 'red',
    'CRITICAL': 'red,bg_white',
}


def setup_logger(name: str = "vidsum", level: Optional[str] = None) -> logging.Logger:
    """
    Configure et retourne un logger avec formatage coloré

    Args:
        name: Nom du logger (en pratique __name__ du module)
        level: Niveau de log (DEBUG, INFO, WARNING, ERROR). Si None, utilise settings.LOG_LEVEL

    Returns:
        Logger configuré
    """
    level = (level or settings.LOG_LEVEL).upper()

    logger = colorlog.getLogger(name)
    logger.setLevel(getattr(logging, level))

    # Éviter les doublons de handlers
    if logger.handlers:
        return logger

    console_handler = colorlog.StreamHandler(sys.stdout)
    console_handler.setFormatter(colorlog.ColoredFormatter(CONSOLE_FORMAT, datefmt=DATE_FORMAT,
                                                           log_colors=LOG_COLORS))
    logger.addHandler(console_handler)

    # Handler fichier (log quotidien, sans couleurs)
    log_file = settings.LOGS_DIR / f"vidsum_{datetime.now().strftime('%Y%m%d')}.log"
    file_handler = logging.FileHandler(log_file, encoding='utf-8')
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(file_handler)

    return logger


def log_section(logger: logging.Logger, title: str, char: str = "=", length: int = 80):
    """Affiche un titre de section dans les logs"""
    padding = max((length - len(title) - 2) // 2, 3)
    logger.info(f"{char * padding} {title} {char * padding}")


def format_metrics(values: Mapping[str, float], precision: int = 4) -> str:
    """`L_var=12 | L_recon=0.03125` : une métrique par champ, format compact"""
    return " | ".join(f"{name}={value:.{precision}g}" for name, value in values.items())


# ========================================
# JOURNAUX JSON LINES
# ========================================
class JsonlLog:
    """
    Journal JSON Lines : un enregistrement par ligne, clés triées

    Le fichier est vidé après chaque ligne pour qu'un entraînement interrompu
    laisse un journal lisible.
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, 'w', encoding='utf-8')
        self.count = 0

    def write(self, record: Mapping[str, Any]) -> None:
        self._file.write(json.dumps(dict(record), sort_keys=True) + "\n")
        self._file.flush()
        self.count += 1

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    def __enter__(self) -> 'JsonlLog':
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_jsonl(path: Union[str, Path], records: Iterable[Mapping[str, Any]]) -> Path:
    """Écrit tous les enregistrements d'un coup"""
    with JsonlLog(path) as log:
        for record in records:
            log.write(record)
    return log.path


def read_jsonl(path: Union[str, Path]) -> List[Dict[str, Any]]:
    """Relit un journal (lignes vides ignorées)"""
    with open(path, 'r', encoding='utf-8') as f:
        return [json.loads(line) for line in f if line.strip()]


__all__ = [
    'setup_logger',
    'log_section',
    'format_metrics',
    'JsonlLog',
    'write_jsonl',
    'read_jsonl',
]
