"""Wall-clock helpers for training logs."""

from timeit import default_timer
from typing import Optional

from attrs import define, field


def format_seconds_adaptive(seconds: float, format_str="{:.1f}{}") -> str:
    """Format as 1.2s, 1.2min, 1.2h or 1.2d depending on the magnitude."""
    abs_seconds = abs(seconds)
    if abs_seconds < 60:
        number, unit = seconds, "s"
    elif abs_seconds < 3600:
        number, unit = seconds / 60, "min"
    elif abs_seconds < 3600 * 24:
        number, unit = seconds / 3600, "h"
    else:
        number, unit = seconds / (3600 * 24), "d"
    return format_str.format(number, unit)


@define
class Stopwatch:
    """
    Usage:
        >>> watch = Stopwatch()
        >>> lap = watch.lap()      # seconds since start or the previous lap
        >>> total = watch.total()  # seconds since start
    """

    start: float = field(factory=default_timer)
    _last: Optional[float] = field(default=None, init=False)

    def lap(self) -> float:
        now = default_timer()
        last = self.start if self._last is None else self._last
        self._last = now
        return now - last

    def total(self) -> float:
        return default_timer() - self.start
