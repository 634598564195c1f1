"""Loop perforation: small, large, ini, fini and herded variants."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class PerfoKind(enum.Enum):
    SMALL = "small"
    LARGE = "large"
    INI = "ini"
    FINI = "fini"
    HERDED_SMALL = "herded_small"
    HERDED_LARGE = "herded_large"

    @property
    def is_modulus(self) -> bool:
        return self not in (PerfoKind.INI, PerfoKind.FINI)

    @property
    def is_herded(self) -> bool:
        return self in (PerfoKind.HERDED_SMALL, PerfoKind.HERDED_LARGE)


@dataclass(frozen=True)
class PerfoConfig:
    kind: PerfoKind
    m: int = 0
    skip_percent: int = 0

    def __post_init__(self):
        if self.kind.is_modulus:
            if self.m < 2:
                raise ValueError(f"{self.kind.value} perforation needs m >= 2, got {self.m}")
        elif not 1 <= self.skip_percent <= 99:
            raise ValueError(f"skip_percent must be in 1..99, got {self.skip_percent}")

    @property
    def arg(self) -> int:
        return self.m if self.kind.is_modulus else self.skip_percent


def skip_count(percent: int, trip_count: int) -> int:
    # integer floor of percent/100 * trip_count, no float rounding
    return percent * trip_count // 100


def should_skip(cfg: PerfoConfig, counter: int, trip_count: int | None = None) -> bool:
    """Whether the ``counter``-th encounter (or iteration index) is dropped.

    For herded kinds ``counter`` must be the shared step index, which every lane
    of a warp sees identically.
    """
    k = cfg.kind
    if k in (PerfoKind.SMALL, PerfoKind.HERDED_SMALL):
        return counter % cfg.m == cfg.m - 1
    if k in (PerfoKind.LARGE, PerfoKind.HERDED_LARGE):
        return counter % cfg.m != 0
    if trip_count is None:
        raise ValueError(f"{k.value} perforation needs the loop trip count")
    dropped = skip_count(cfg.skip_percent, trip_count)
    if k is PerfoKind.INI:
        return counter < dropped
    return counter >= trip_count - dropped


def rewrite_bounds(cfg: PerfoConfig, lower: int, upper: int) -> tuple[int, int]:
    """New ``[lower, upper)`` bounds for ini/fini perforation."""
    if cfg.kind not in (PerfoKind.INI, PerfoKind.FINI):
        raise ValueError(f"bounds rewriting applies to ini/fini, not {cfg.kind.value}")
    if lower >= upper:
        raise ValueError(f"empty loop [{lower}, {upper})")
    dropped = skip_count(cfg.skip_percent, upper - lower)
    if cfg.kind is PerfoKind.INI:
        return lower + dropped, upper
    return lower, upper - dropped


class PerfoCounter:
    """Per-thread encounter counters; herded kinds read the shared step instead."""

    def __init__(self):
        self._count: dict[int, int] = {}

    def next(self, thread_id: int) -> int:
        c = self._count.get(thread_id, 0)
        self._count[thread_id] = c + 1
        return c

    def peek(self, thread_id: int) -> int:
        return self._count.get(thread_id, 0)
