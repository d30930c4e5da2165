"""Configuration management utilities."""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from .logging import get_logger

logger = get_logger("config")

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent.parent / "config" / "default.yaml"


def load_mapping(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a YAML or JSON file into a dictionary."""
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as f:
        if path.suffix.lower() in ['.yaml', '.yml']:
            data = yaml.safe_load(f) or {}
        else:
            data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path} must contain a mapping at the top level")
    return data


class ConfigManager:
    """Manages the YAML configuration with dot-notation access."""

    def __init__(self, config_path: Optional[Union[str, Path]] = None):
        self.config_path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
        self._config: Dict[str, Any] = {}

        self.load_config()

    def load_config(self) -> None:
        """Load configuration from file."""
        if not self.config_path.exists():
            logger.warning(f"Configuration file {self.config_path} not found, using defaults")
            self._config = {}
            return

        try:
            self._config = load_mapping(self.config_path)
            logger.debug(f"Configuration loaded from {self.config_path}")
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            logger.error(f"Error parsing configuration file: {e}")
            raise

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by key (supports dot notation)."""
        keys = key.split('.')
        value = self._config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def set(self, key: str, value: Any) -> None:
        """Set configuration value by key (supports dot notation)."""
        keys = key.split('.')
        config = self._config

        for k in keys[:-1]:
            if k not in config:
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def has_section(self, section: str) -> bool:
        """Check if a configuration section exists."""
        return self.get(section) is not None
