"""Progress of a Monte Carlo sweep: trials finished across all sweep points."""

from __future__ import annotations

import threading
from collections.abc import Callable
from typing import Any

from loguru import logger

__all__ = ["ProgressReporter"]

_LOG_EVERY_PCT = 10


class ProgressReporter:
    """Counts finished trials over a whole sweep (points x trials per point).

    With ``show_bar`` a ``tqdm.auto`` bar is drawn, its postfix naming the sweep point being
    evaluated. tqdm comes from the optional ``progress`` extra; when it is missing the sweep
    is reported as INFO log lines, one per 10% of all trials. ``callback`` gets
    ``(trials_done, trials_total)`` after each trial. Trials finish on worker threads, so
    every update holds a lock.
    """

    def __init__(
        self,
        total: int,
        *,
        show_bar: bool,
        callback: Callable[[int, int], None] | None = None,
        desc: str = "Trials",
    ) -> None:
        self._total = total
        self._done = 0
        self._callback = callback
        self._desc = desc
        self._point: str | None = None
        self._bar: Any = None
        self._log_fallback = False
        self._next_log_pct = _LOG_EVERY_PCT
        self._lock = threading.Lock()
        if show_bar:
            try:
                from tqdm.auto import tqdm

                self._bar = tqdm(total=total, desc=desc, unit="trial")
            except ImportError:
                logger.warning(
                    f"tqdm is not installed, so the {total}-trial sweep is reported in the "
                    "log instead of a bar (pip install 'oikf[progress]' adds it)"
                )
                self._log_fallback = True

    @property
    def done(self) -> int:
        """Trials finished so far, over all sweep points."""
        return self._done

    def start_point(self, label: str) -> None:
        """Name the sweep point whose trials are about to run."""
        with self._lock:
            self._point = label
            if self._bar is not None:
                self._bar.set_postfix_str(label, refresh=False)

    def update(self, n: int = 1) -> None:
        """Count ``n`` more finished trials."""
        if n <= 0:
            return
        with self._lock:
            self._done = min(self._done + n, self._total)
            if self._bar is not None:
                self._bar.update(n)
            if self._callback is not None:
                self._callback(self._done, self._total)
            if self._log_fallback and self._total:
                pct = self._done * 100 // self._total
                if pct >= self._next_log_pct:
                    self._next_log_pct = pct - pct % _LOG_EVERY_PCT + _LOG_EVERY_PCT
                    where = f" at {self._point}" if self._point else ""
                    logger.info(f"{self._desc}: {self._done}/{self._total} ({pct}%){where}")

    def close(self) -> None:
        if self._bar is not None:
            self._bar.close()
