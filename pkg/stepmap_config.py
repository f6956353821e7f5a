#!/usr/bin/env python3
"""
Konfiguracja stepmap
Odczyt ustawień z pliku .env / zmiennych środowiskowych oraz konfiguracja logowania.
"""

import os
import logging
from dataclasses import dataclass, asdict
from typing import Dict, Any

from dotenv import load_dotenv

from stepmap_errors import ConfigurationError

# Ładowanie zmiennych środowiskowych
load_dotenv()

VERSION = "1.0.0"

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


@dataclass(frozen=True)
class Settings:
    """Ustawienia globalne biblioteki (STEPMAP_*)"""
    threads: int = 0            # 0 = auto (liczba rdzeni)
    truncation: int = 512       # stopień obcięcia szeregów potęgowych
    log_level: str = "INFO"
    seed: int = 0
    output_dir: str = "."

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _int_env(name: str, default: int, minimum: int = 0) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"Zmienna {name} musi być liczbą całkowitą (podano: {raw!r})",
                                 details={'variable': name, 'value': raw})
    if value < minimum:
        raise ConfigurationError(f"Zmienna {name} musi być >= {minimum} (podano: {value})",
                                 details={'variable': name, 'value': value})
    return value


def load_settings() -> Settings:
    """
    Buduje Settings ze zmiennych środowiskowych

    Returns:
        Settings: rozwiązana konfiguracja
    """
    return Settings(
        threads=_int_env('STEPMAP_THREADS', 0),
        truncation=_int_env('STEPMAP_TRUNCATION', 512, minimum=1),
        log_level=os.getenv('STEPMAP_LOG_LEVEL', 'INFO').upper(),
        seed=_int_env('STEPMAP_SEED', 0),
        output_dir=os.getenv('STEPMAP_OUTPUT_DIR', '.'),
    )


def worker_count(settings: Settings = None) -> int:
    """Liczba wątków roboczych (STEPMAP_THREADS, 0 = auto)"""
    settings = settings or load_settings()
    if settings.threads > 0:
        return settings.threads
    return max(1, os.cpu_count() or 1)


def setup_logging(level: str = None) -> None:
    """Standardowe logowanie - jeden format dla CLI i bibliotek"""
    level = (level or load_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format=LOG_FORMAT
    )
