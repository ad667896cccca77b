from __future__ import annotations

import re
from dataclasses import dataclass

_PATTERN = re.compile(r"^\s*(n|\d+)\s*:\s*(\d{1,2})\s*$")


@dataclass(frozen=True, order=True)
class TimeStamp:
    """A time ``round:tick`` inside the repeated protocol (tick is in seconds, 0-59)."""

    round: int
    tick: int

    def __post_init__(self) -> None:
        if self.round < 0:
            raise ValueError(f"negative round {self.round}")
        if not 0 <= self.tick <= 59:
            raise ValueError(f"tick {self.tick} outside 0..59")

    @classmethod
    def parse(cls, text: str, round: int = 0) -> TimeStamp:
        """Parse ``"n:31"`` (round taken from ``round``) or ``"3:31"``."""
        m = _PATTERN.match(text)
        if not m:
            raise ValueError(f"bad timestamp {text!r}")
        r = round if m.group(1) == "n" else int(m.group(1))
        return cls(r, int(m.group(2)))

    def shifted(self, ticks: int) -> TimeStamp:
        return TimeStamp(self.round, self.tick + ticks)

    def in_round(self, round: int) -> TimeStamp:
        return TimeStamp(round, self.tick)

    @property
    def label(self) -> str:
        """Round-relative spelling, ``n:31``."""
        return f"n:{self.tick:02d}"

    def __str__(self) -> str:
        return f"{self.round}:{self.tick:02d}"
