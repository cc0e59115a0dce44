"""Progress of the running sweep or mu ladder.

Each completed item is logged and timed; the final snapshot goes into the
report metadata under "progress".
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Any

logger = logging.getLogger(__name__)


@dataclass
class RunProgress:
    command: str = ""
    stage: str = ""           # "solving", "ladder"
    done: int = 0
    total: int = 0
    running: bool = False
    started: float = 0.0      # time.monotonic()
    elapsed_s: float = 0.0
    items: list[dict[str, Any]] = field(default_factory=list)
    outcome: str = ""

    def snapshot(self) -> dict[str, Any]:
        elapsed = time.monotonic() - self.started if self.running else self.elapsed_s
        return {
            "command": self.command,
            "stage": self.stage,
            "done": self.done,
            "total": self.total,
            "running": self.running,
            "elapsed_s": round(elapsed, 3),
            "items": [dict(item) for item in self.items],
            "outcome": self.outcome,
        }


_lock = threading.Lock()
_progress = RunProgress()


def get_run_status() -> dict[str, Any]:
    with _lock:
        return _progress.snapshot()


def start_run(command: str, total: int) -> None:
    global _progress
    with _lock:
        _progress = RunProgress(command=command, stage="starting", total=total, running=True, started=time.monotonic())
    logger.info("%s: %d items", command, total)


def update_run(stage: str, done: int, item: str = "") -> None:
    """Mark ``done`` items complete, the last one labelled ``item``."""
    with _lock:
        at = round(time.monotonic() - _progress.started, 3)
        _progress.stage = stage
        _progress.done = done
        _progress.items.append({"item": item, "at_s": at})
        command, total = _progress.command, _progress.total
    logger.info("%s: %s %d/%d %s (%.1fs)", command, stage, done, total, item, at)


def finish_run(outcome: str = "complete") -> None:
    with _lock:
        if not _progress.running:
            return
        _progress.running = False
        _progress.elapsed_s = time.monotonic() - _progress.started
        _progress.stage = "done"
        _progress.outcome = outcome
        command, elapsed = _progress.command, _progress.elapsed_s
    logger.info("%s finished in %.1fs: %s", command, elapsed, outcome)
