"""qworkstat.terminal_output

Side-channel for run notices: recorded run ids, skipped config files,
ignored environment overrides.

The JSON envelope owns stdout when ``--json`` is in effect, so notices are
kept as plain text and returned under the envelope's ``stdout`` key. In
table mode they go straight to a Rich console. Until ``configure`` picks a
destination (config loads before argument parsing finishes) notices wait
in a queue.
"""

from __future__ import annotations

import io
from collections import deque
from typing import Any, Deque, List, Literal, NamedTuple, Optional

from rich.console import Console

Destination = Literal["pending", "stdout", "capture"]

RENDER_WIDTH = 120


class Notice(NamedTuple):
    objects: tuple
    options: dict


def render_plain(notice: Notice) -> str:
    """One notice as uncoloured text, newline included."""
    sink = io.StringIO()
    Console(file=sink, width=RENDER_WIDTH, color_system=None, force_terminal=False).print(
        *notice.objects, **notice.options)
    return sink.getvalue()


class TerminalOutput:
    def __init__(self) -> None:
        self._destination: Destination = "pending"
        self._queue: Deque[Notice] = deque()
        self._lines: List[str] = []
        self._console: Optional[Console] = None

    @property
    def mode(self) -> Destination:
        return self._destination

    def is_capture(self) -> bool:
        return self._destination == "capture"

    def configure(self, destination: Literal["stdout", "capture"]) -> None:
        """Fix where notices go and release the queued ones there."""
        if destination not in ("stdout", "capture"):
            raise ValueError(f"Invalid terminal output mode: {destination}")
        self._destination = destination
        while self._queue:
            self._emit(self._queue.popleft())

    def reset(self) -> None:
        self._destination = "pending"
        self._queue.clear()
        self._lines = []

    def print(self, *objects: Any, **options: Any) -> None:
        """Same arguments as ``rich.console.Console.print``."""
        notice = Notice(objects, options)
        if self._destination == "pending":
            self._queue.append(notice)
        else:
            self._emit(notice)

    def warn(self, message: str) -> None:
        self.print(f"Warning: {message}", style="yellow", markup=False)

    def get_stdout(self) -> str:
        if self._destination == "pending":
            return "".join(render_plain(n) for n in self._queue)
        return "".join(self._lines)

    def _emit(self, notice: Notice) -> None:
        if self._destination == "capture":
            self._lines.append(render_plain(notice))
            return
        if self._console is None:
            self._console = Console()
        self._console.print(*notice.objects, **notice.options)


terminal_output = TerminalOutput()
