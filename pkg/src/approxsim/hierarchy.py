"""Majority-rules activation at thread, warp and team granularity."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .simt import (Allocation, TeamContext, WarpContext, atomic_add_shared, ballot,
                   popcount)

VOTE_COUNTER_TAG = "team-vote"
VOTE_COUNTER_BYTES = 8


class HierarchyLevel(enum.Enum):
    THREAD = "thread"
    WARP = "warp"
    TEAM = "team"

    @classmethod
    def parse(cls, word: str) -> "HierarchyLevel":
        w = word.strip().lower()
        if w == "block":
            return cls.TEAM
        return cls(w)


@dataclass(frozen=True)
class VoteResult:
    yes_votes: int
    group_size: int

    @property
    def decision(self) -> bool:
        # strict majority; a tie stays on the accurate path
        return 2 * self.yes_votes > self.group_size


def decide_thread(predicate: bool) -> bool:
    return bool(predicate)


def decide_warp(warp: WarpContext, predicates) -> VoteResult:
    mask = ballot(warp, predicates)
    return VoteResult(popcount(mask), warp.active_count)


def decide_team(team: TeamContext, predicates, counter: Allocation | None = None,
                order=None) -> VoteResult:
    """Team-wide vote through a shared counter.

    ``predicates`` covers every lane of the team.  Each warp leader adds its
    popcount atomically, the team synchronises, and every thread reads the
    total.  ``order`` permutes the warp contribution order.
    """
    predicates = np.asarray(predicates, dtype=bool)
    if counter is None:
        counter = team.arena.find(VOTE_COUNTER_TAG)
    team.arena.view(counter, np.int64)[0] = 0
    warps = team.warps if order is None else [team.warps[i] for i in order]
    for w in warps:
        if w.active_count == 0:
            continue
        yes = popcount(ballot(w, predicates[w.lanes]))
        atomic_add_shared(team.arena, counter, yes)
    team.barrier(team.active)
    total = int(team.arena.view(counter, np.int64)[0])
    return VoteResult(total, team.active_count)
