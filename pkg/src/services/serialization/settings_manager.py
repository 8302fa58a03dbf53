# src/services/serialization/settings_manager.py
"""
Settings Manager - loads the pipeline configuration (JSON).

Relative paths inside the file are resolved against the file's directory.
"""

from __future__ import annotations

import json
import logging
import os
from typing import Any, Dict, Optional

from models.config.pipeline_config import PipelineConfig
from services.serialization.json_io import content_hash
from utils.errors import ConfigError, IoError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "config.json"

_settings_manager: Optional["SettingsManager"] = None


def get_settings_manager(config_path: Optional[str] = None) -> "SettingsManager":
    global _settings_manager
    if _settings_manager is None or (config_path and config_path != _settings_manager.config_path):
        _settings_manager = SettingsManager(config_path or DEFAULT_CONFIG_PATH)
    return _settings_manager


class SettingsManager:
    def __init__(self, config_path: str = DEFAULT_CONFIG_PATH):
        self.config_path = config_path
        self._raw: Optional[Dict[str, Any]] = None

    # ─── Raw I/O ───────────────────────────────────────────────────────────

    def _load_raw(self) -> Dict[str, Any]:
        if not os.path.exists(self.config_path):
            raise IoError(f"config file not found: {self.config_path}")
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{self.config_path}: invalid JSON: {e}") from e
        except OSError as e:
            raise IoError(f"cannot read {self.config_path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{self.config_path}: root must be a JSON object")
        return data

    @property
    def base_dir(self) -> str:
        return os.path.dirname(os.path.abspath(self.config_path))

    # ─── PipelineConfig ────────────────────────────────────────────────────

    def load_config(self) -> PipelineConfig:
        self._raw = self._load_raw()
        config = PipelineConfig.from_dict(self._raw, self.base_dir)
        logger.debug("Loaded config %s (hash %s)", self.config_path, self.config_hash()[:12])
        return config

    def config_hash(self) -> str:
        """Hash of the file's parsed content, used for provenance records."""
        if self._raw is None:
            self._raw = self._load_raw()
        return content_hash(self._raw)
