from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

from ..core import MagicError


class VoteError(MagicError, ValueError):
    pass


class SelfVote(VoteError):
    pass


class UnknownTarget(VoteError):
    pass


@dataclass(frozen=True)
class VoteResult:
    tally: dict[int, int]
    top: frozenset[int]

    @property
    def is_tie(self) -> bool:
        return len(self.top) > 1

    @property
    def winner(self) -> int | None:
        return next(iter(self.top)) if len(self.top) == 1 else None


def tally_votes(votes: Mapping[int, int], players: Iterable[int] | None = None) -> VoteResult:
    """Plurality count of ``voter -> target``; any tie at the top is reported as a tie."""
    known = set(players) if players is not None else None
    for voter, target in votes.items():
        if voter == target:
            raise SelfVote(f"player {voter} voted for themself")
        if known is not None and (target not in known or voter not in known):
            raise UnknownTarget(f"vote {voter}->{target} names an unknown player")
    counts = Counter(votes.values())
    tally = dict(sorted(counts.items()))
    if not tally:
        return VoteResult({}, frozenset())
    best = max(tally.values())
    return VoteResult(tally, frozenset(p for p, c in tally.items() if c == best))
