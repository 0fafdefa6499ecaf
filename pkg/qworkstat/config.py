"""
Application configuration for qworkstat.

Handles loading configuration from TOML files and environment variables. This
is the tool's own setup (where runs go, whether they are recorded); experiment
parameters live in experiment_config.
"""

import os
import toml
from pathlib import Path
from typing import Dict, Any, Optional
from dotenv import load_dotenv

from .terminal_output import terminal_output


TRUE_VALUES = ('true', '1', 'yes', 'on')


class Config:
    """Configuration manager for qworkstat."""

    def __init__(self):
        self._config = {}
        self._load_config()

    def _load_config(self):
        """Load configuration from files and environment variables."""
        self._config = {
            'database': {
                'url': 'sqlite:///runs/qworkstat.db'
            },
            'runs': {
                'record': False,
            },
            'output': {
                'root': 'runs',
            },
            'sweep': {
                'workers': 1,
            },
            'env': {
                'file_path': str(Path.home() / '.env')
            }
        }

        config_paths = [
            Path.home() / '.qworkstat' / 'config.toml',
            Path.cwd() / 'qworkstat.toml',
            Path.cwd() / '.qworkstat.toml'
        ]

        for config_path in config_paths:
            if config_path.exists():
                try:
                    file_config = toml.load(config_path)
                    self._merge_config(file_config)
                    break
                except Exception as e:
                    terminal_output.warn(f"Error loading config from {config_path}: {e}")

        self._load_env_file()
        self._load_env_overrides()

    def _merge_config(self, new_config: Dict[str, Any]):
        """Merge new configuration into existing config."""
        for section, values in new_config.items():
            if section not in self._config:
                self._config[section] = {}
            if isinstance(values, dict):
                self._config[section].update(values)
            else:
                self._config[section] = values

    def _load_env_overrides(self):
        """Load configuration overrides from environment variables."""
        db_url = os.getenv('QWORKSTAT_DATABASE_URL')
        if db_url:
            self._config['database']['url'] = db_url

        record = os.getenv('QWORKSTAT_RECORD')
        if record is not None:
            self._config['runs']['record'] = record.lower() in TRUE_VALUES

        output_root = os.getenv('QWORKSTAT_OUTPUT_ROOT')
        if output_root:
            self._config['output']['root'] = output_root

        workers = os.getenv('QWORKSTAT_WORKERS')
        if workers:
            try:
                self._config['sweep']['workers'] = max(1, int(workers))
            except ValueError:
                terminal_output.warn(f"ignoring QWORKSTAT_WORKERS={workers!r}")

    def _load_env_file(self):
        """Load environment variables from .env file."""
        env_path = Path(self.get('env', 'file_path', str(Path.home() / '.env')))

        if env_path.exists():
            try:
                load_dotenv(env_path)
            except Exception as e:
                terminal_output.warn(f"Error loading .env file from {env_path}: {e}")

    def get(self, section: str, key: str, default: Any = None) -> Any:
        """Get configuration value."""
        return self._config.get(section, {}).get(key, default)

    def get_database_url(self) -> str:
        return self.get('database', 'url', 'sqlite:///runs/qworkstat.db')

    def is_recording_enabled(self) -> bool:
        """Whether scenario runs are written to the run registry."""
        return bool(self.get('runs', 'record', False))

    def get_output_root(self) -> Path:
        return Path(self.get('output', 'root', 'runs'))

    def get_workers(self) -> int:
        return int(self.get('sweep', 'workers', 1))


# Global configuration instance
_config: Optional[Config] = None


def get_config() -> Config:
    """Get global configuration instance."""
    global _config
    if _config is None:
        _config = Config()
    return _config


def reset_config():
    """Drop the cached instance so the next get_config() re-reads files and environment."""
    global _config
    _config = None
