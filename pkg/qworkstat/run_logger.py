"""
Stage logging for scenario runs.

PRODUCTION keeps stdout clean for reports; DEBUG adds rich stage and timing
lines on stderr. Warnings and errors reach stderr in every mode.
"""

import logging
import sys
import time
from contextlib import contextmanager
from enum import Enum

from rich.console import Console


class LogMode(Enum):
    PRODUCTION = "production"  # Clean STDOUT only
    DEBUG = "debug"            # Rich STDERR output only


STAGE_LEVEL = 22    # Pipeline stages of a scenario run

logging.addLevelName(STAGE_LEVEL, 'STAGE')


class RunLogger:
    """Logger for one scenario run."""

    def __init__(self, scenario_name: str, mode: LogMode = LogMode.PRODUCTION):
        self.scenario_name = scenario_name
        self.mode = mode
        self.console = Console(stderr=True)
        self._log = logging.getLogger(f"qworkstat.run.{scenario_name}")

    def _write_to_stderr(self, message: str):
        if self.mode == LogMode.DEBUG:
            self.console.print(message)

    def log_info(self, message: str):
        if self.mode == LogMode.DEBUG:
            self._write_to_stderr(f"[dim]INFO: {message}[/dim]")

    def log_debug(self, message: str):
        if self.mode == LogMode.DEBUG:
            self._write_to_stderr(f"[dim]DEBUG: {message}[/dim]")

    def log_stage(self, stage: str, message: str = ""):
        self._log.log(STAGE_LEVEL, f"{self.scenario_name}:{stage} {message}".rstrip())
        if self.mode == LogMode.DEBUG:
            self._write_to_stderr(f"[green]STAGE: {stage}[/green] {message}".rstrip())

    def log_warning(self, message: str):
        print(f"Warning: {message}", file=sys.stderr)
        if self.mode == LogMode.DEBUG:
            self.console.print(f"[bold yellow]Warning: {message}[/bold yellow]")

    def log_error(self, message: str):
        print(f"Error: {message}", file=sys.stderr)
        if self.mode == LogMode.DEBUG:
            self.console.print(f"[bold red]Error: {message}[/bold red]")

    @contextmanager
    def stage(self, name: str):
        """Time a pipeline stage; DEBUG mode prints its wall time."""
        self.log_stage(name, "started")
        start = time.perf_counter()
        yield
        self.log_stage(name, f"done ({time.perf_counter() - start:.3f} secs)")
