import os
import configparser
from pathlib import Path
from typing import Dict, Any, Optional

DEFAULT_SMATRIX_DPS = 40
MIN_SMATRIX_DPS = 20


def _default_cache_dir() -> str:
    base = os.getenv("XDG_CACHE_HOME") or os.path.join(Path.home(), ".cache")
    return os.path.join(base, "parahoric-blocks")


class Config:
    """Configuration management for parahoric-blocks computations"""

    def __init__(self):
        self.config = configparser.ConfigParser()
        self.warnings = []
        self.load_config()

    def load_config(self):
        """Load configuration from environment variables and an optional INI file"""
        self.config.clear()
        self.warnings = []
        ini_path = os.getenv("PARAHORIC_CONFIG", "")
        if ini_path:
            read = self.config.read(ini_path)
            if not read:
                self.warnings.append(f"Config file {ini_path} could not be read")

        # Cache
        self.CACHE_DIR = self._get("PARAHORIC_CACHE_DIR", "cache_dir", _default_cache_dir())
        self.NO_CACHE = self._get("PARAHORIC_NO_CACHE", "no_cache", "false").lower() == "true"

        # Logging
        self.LOG_LEVEL = self._get("PARAHORIC_LOG_LEVEL", "log_level", "WARNING").upper()
        self.LOG_FILE = self._get("PARAHORIC_LOG_FILE", "log_file", "")

        # S-matrix oracle precision
        self.SMATRIX_DPS = self._get_int("PARAHORIC_SMATRIX_DPS", "smatrix_dps", DEFAULT_SMATRIX_DPS)

        self.validate_config()

    def _get(self, env_name: str, ini_key: str, default: str) -> str:
        value = os.getenv(env_name)
        if value is not None and value != "":
            return value
        if self.config.has_option("parahoric", ini_key):
            return self.config.get("parahoric", ini_key)
        return default

    def _get_int(self, env_name: str, ini_key: str, default: int) -> int:
        raw = self._get(env_name, ini_key, str(default))
        try:
            return int(raw)
        except ValueError:
            self.warnings.append(f"{env_name}={raw!r} is not an integer, using {default}")
            return default

    def validate_config(self):
        """Validate configuration values, falling back to defaults on bad input"""
        if self.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            self.warnings.append(f"Unknown log level {self.LOG_LEVEL}, using WARNING")
            self.LOG_LEVEL = "WARNING"

        if self.SMATRIX_DPS < MIN_SMATRIX_DPS:
            self.warnings.append(
                f"S-matrix precision {self.SMATRIX_DPS} below {MIN_SMATRIX_DPS} digits, using {MIN_SMATRIX_DPS}"
            )
            self.SMATRIX_DPS = MIN_SMATRIX_DPS

    def set_cache(self, cache_dir: Optional[str] = None, no_cache: Optional[bool] = None):
        """Apply command-line overrides for the fusion cache"""
        if cache_dir:
            self.CACHE_DIR = cache_dir
        if no_cache is not None:
            self.NO_CACHE = no_cache

    def get_cache_config(self) -> Dict[str, Any]:
        """Get fusion cache configuration"""
        return {
            "cache_dir": self.CACHE_DIR,
            "enabled": not self.NO_CACHE
        }

    def get_log_config(self) -> Dict[str, Any]:
        """Get logging configuration"""
        return {
            "log_level": self.LOG_LEVEL,
            "log_file": self.LOG_FILE
        }

    def get_oracle_config(self) -> Dict[str, Any]:
        """Get S-matrix oracle configuration"""
        return {
            "dps": self.SMATRIX_DPS,
            "tolerance": 1e-6
        }


# Global configuration instance
config = Config()
