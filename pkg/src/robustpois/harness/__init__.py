"""Configuration, file formats and the ``robustpois`` command line."""

from .cli import main
from .config import ConfigError, RunConfig, load_config, parse_config
from .files import SeriesFormatError, read_series_csv, write_series_csv

__all__ = [
    "main",
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
    "SeriesFormatError",
    "read_series_csv",
    "write_series_csv",
]
