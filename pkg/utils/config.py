"""Configuration management for strip-codes"""
import copy
import json
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional

from core.errors import ConfigError

STORE_DIR_ENV = "STRIP_CODES_STORE_DIR"


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one solver run"""

    threads: int
    power_cap: int
    store_dir: str
    memory_cap_bytes: int
    oracle_cap_vertices: int
    compress_store: bool = True
    in_memory_store: bool = False

    def __post_init__(self):
        for name in ("threads", "power_cap", "memory_cap_bytes", "oracle_cap_vertices"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.power_cap < 2:
            raise ConfigError(f"power_cap must be at least 2, got {self.power_cap}")
        if not self.store_dir:
            raise ConfigError("store_dir must not be empty")


class ConfigManager:
    """Manages solver configuration stored as JSON in the user's home"""

    def __init__(self, config_dir: Optional[str] = None):
        self.config_dir = config_dir or os.path.expanduser("~/.strip-codes")
        self.config_file = os.path.join(self.config_dir, "config.json")
        self.defaults = self._get_defaults()
        self.config = self.load_config()

    def _get_defaults(self) -> Dict[str, Any]:
        """Get default configuration values"""
        return {
            "solver": {
                "threads": None,
                "power_cap": 1000,
                "memory_cap_bytes": 4 * 1024 ** 3,
                "oracle_cap_vertices": 20,
            },
            "store": {
                "dir": os.path.join(self.config_dir, "powers"),
                "compress": True,
                "in_memory": False,
            },
        }

    def load_config(self) -> Dict[str, Any]:
        """Load configuration from file"""
        if not os.path.exists(self.config_file):
            return copy.deepcopy(self.defaults)

        try:
            with open(self.config_file, 'r') as f:
                loaded = json.load(f)

            # Merge with defaults to ensure all keys exist
            config = copy.deepcopy(self.defaults)
            if isinstance(loaded, dict):
                self._deep_update(config, loaded)
            return config

        except (json.JSONDecodeError, FileNotFoundError, PermissionError):
            return copy.deepcopy(self.defaults)

    def save_config(self) -> bool:
        """Save configuration to file"""
        try:
            os.makedirs(self.config_dir, exist_ok=True)
            with open(self.config_file, 'w') as f:
                json.dump(self.config, f, indent=2)
            return True
        except (PermissionError, OSError):
            return False

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value using dot notation"""
        value = self.config
        for k in key.split('.'):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any) -> None:
        """Set configuration value using dot notation"""
        keys = key.split('.')
        config = self.config

        for k in keys[:-1]:
            if k not in config or not isinstance(config[k], dict):
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def store_dir(self) -> str:
        return os.environ.get(STORE_DIR_ENV) or os.path.expanduser(self.get("store.dir"))

    def run_config(self, **overrides: Any) -> RunConfig:
        """Frozen RunConfig from the stored values; None overrides are ignored"""
        values = {
            "threads": self.get("solver.threads") or os.cpu_count() or 1,
            "power_cap": self.get("solver.power_cap"),
            "store_dir": self.store_dir(),
            "memory_cap_bytes": self.get("solver.memory_cap_bytes"),
            "oracle_cap_vertices": self.get("solver.oracle_cap_vertices"),
            "compress_store": bool(self.get("store.compress", True)),
            "in_memory_store": bool(self.get("store.in_memory", False)),
        }
        for key, value in overrides.items():
            if key not in values:
                raise ConfigError(f"unknown setting {key!r}")
            if value is not None:
                values[key] = value
        return RunConfig(**values)

    def reset_to_defaults(self) -> None:
        """Reset configuration to defaults"""
        self.config = copy.deepcopy(self.defaults)

    def _deep_update(self, base_dict: Dict, update_dict: Dict) -> None:
        """Recursively update nested dictionary"""
        for key, value in update_dict.items():
            if key in base_dict and isinstance(base_dict[key], dict) and isinstance(value, dict):
                self._deep_update(base_dict[key], value)
            else:
                base_dict[key] = value
