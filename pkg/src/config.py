"""
Configuration module for the GEMO reliability toolkit
Settings come from environment variables, optionally seeded from a .env file
"""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

from utils.errors import ConfigError

logger = logging.getLogger(__name__)

load_dotenv()

DEFAULT_QUAD_TOL = 1e-10
DEFAULT_QUAD_ABS_TOL = 1e-12

# Bundled study datasets, relative to the raw data directory
BUNDLED_DATASETS = {
    "bladder_cancer": "bladder_cancer.txt",
    "glass_fiber": "glass_fiber.txt",
}


def get_base_path():
    """Get the base path for the application"""
    env_path = os.environ.get('GEMO_BASE_PATH')
    if env_path:
        return Path(env_path)
    # Default: relative to this file's location
    return Path(__file__).parent.parent


def get_data_path():
    """Get the path to the data directory"""
    env_path = os.environ.get('GEMO_DATA_PATH')
    if env_path:
        return Path(env_path)
    return get_base_path() / "data"


def get_raw_data_path():
    """Get the path to the bundled lifetime datasets"""
    return get_data_path() / "raw"


def get_reference_path():
    """Get the path to published reference tables"""
    return get_data_path() / "reference"


def _float_setting(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {raw!r}")
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {raw!r}")
    return value


def get_quad_tol() -> float:
    """Relative quadrature tolerance, read at call time"""
    return _float_setting('GEMO_QUAD_TOL', DEFAULT_QUAD_TOL)


def get_quad_abs_tol() -> float:
    """Absolute quadrature tolerance, read at call time"""
    return _float_setting('GEMO_QUAD_ABS_TOL', DEFAULT_QUAD_ABS_TOL)


def get_log_level() -> int:
    """Logging level from GEMO_DEBUG / GEMO_LOG_LEVEL"""
    if os.environ.get('GEMO_DEBUG'):
        return logging.DEBUG
    name = os.environ.get('GEMO_LOG_LEVEL', 'WARNING').upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ConfigError(f"GEMO_LOG_LEVEL is not a logging level: {name!r}")
    return level


def dataset_path(name: str) -> Path:
    """
    Resolve a bundled dataset name or a filesystem path

    Args:
        name: "bladder_cancer", "glass_fiber" or a path to a lifetime file

    Returns:
        Path to the file (existence is checked by the loader)
    """
    key = name.lower().replace('-', '_')
    if key in BUNDLED_DATASETS:
        return get_raw_data_path() / BUNDLED_DATASETS[key]
    return Path(name)


def log_settings():
    """Dump resolved settings when running in debug mode"""
    if os.environ.get('GEMO_DEBUG'):
        logger.debug("GEMO Config:")
        logger.debug("  BASE_PATH: %s", get_base_path())
        logger.debug("  DATA_PATH: %s", get_data_path())
        logger.debug("  QUAD_TOL: %g", get_quad_tol())
        logger.debug("  QUAD_ABS_TOL: %g", get_quad_abs_tol())
