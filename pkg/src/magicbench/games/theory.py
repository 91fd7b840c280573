"""Payoff and settlement arithmetic for the three game-theory scenarios."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..core import MagicError

SHARE_TOLERANCE = 0.01


class Move(str, enum.Enum):
    COOPERATE = "cooperate"
    DEFECT = "defect"


class WrongPlayerCount(MagicError, ValueError):
    pass


class Overdraft(MagicError, ValueError):
    def __init__(self, player: int, amount: float, available: float):
        super().__init__(f"player {player} contributes {amount} but only has {available}")
        self.player = player


class ProposalError(MagicError, ValueError):
    pass


class VoteForMissingProposal(MagicError, ValueError):
    pass


@dataclass(frozen=True)
class PDScoring:
    cooperate: float
    defect: float
    one_defect: float
    two_defect: float

    def __post_init__(self) -> None:
        if not (self.one_defect > self.cooperate > self.defect >= 0):
            warnings.warn(
                f"scoring {self} does not satisfy one_defect > cooperate > defect >= 0",
                stacklevel=3,
            )


def pd_payoffs(choices: Mapping[int, Move], scoring: PDScoring) -> dict[int, float]:
    """One round of the three-player dilemma."""
    if len(choices) != 3:
        raise WrongPlayerCount(f"three-player dilemma needs 3 choices, got {len(choices)}")
    defectors = [p for p, m in choices.items() if Move(m) is Move.DEFECT]
    n_def = len(defectors)
    out: dict[int, float] = {}
    for p in choices:
        defected = p in defectors
        if n_def == 0:
            out[p] = scoring.cooperate
        elif n_def == 3:
            out[p] = scoring.defect
        elif n_def == 1:
            out[p] = scoring.one_defect if defected else 0
        else:
            out[p] = scoring.two_defect if defected else 0
    return out


@dataclass(frozen=True)
class Proposal:
    proposer: int
    shares: dict[int, float]

    def validate(self, total_fee: float, players: Iterable[int]) -> None:
        players = tuple(players)
        if set(self.shares) != set(players):
            raise ProposalError(f"proposal must name exactly players {list(players)}")
        if any(not math.isfinite(v) or v < 0 for v in self.shares.values()):
            raise ProposalError("shares must be finite and non-negative")
        total = sum(self.shares.values())
        if abs(total - total_fee) > SHARE_TOLERANCE + 1e-9:  # float slack so exactly 0.01 off passes
            raise ProposalError(f"shares sum to {total:g}, expected {total_fee:g}")


def cs_resolve_round(proposals: Iterable[Proposal], votes: Mapping[int, int]) -> Proposal | None:
    """The proposal every player voted for, or ``None`` without unanimity."""
    by_proposer = {p.proposer: p for p in proposals}
    for voter, proposer in votes.items():
        if proposer not in by_proposer:
            raise VoteForMissingProposal(f"player {voter} voted for missing proposal by {proposer}")
    chosen = set(votes.values())
    if len(chosen) == 1 and len(votes) == len(by_proposer):
        return by_proposer[chosen.pop()]
    return None


def cs_fairness_check(proposal: Proposal, standalone_costs: Mapping[int, float] | None) -> list[int]:
    """Players asked to pay more than it would cost them to go it alone."""
    if not standalone_costs:
        return []
    return sorted(p for p, share in proposal.shares.items() if share > standalone_costs[p] + 1e-12)


@dataclass(frozen=True)
class PGLedger:
    balances: dict[int, float]
    multiplier: float
    contributions_history: tuple[dict[int, float], ...] = field(default=())

    @classmethod
    def start(cls, players: Iterable[int], multiplier: float, initial_balance: float = 100.0) -> PGLedger:
        return cls({p: float(initial_balance) for p in players}, multiplier)


def pg_settle(contributions: Mapping[int, float], ledger: PGLedger) -> PGLedger:
    """Collect contributions, multiply the pool and hand it back in equal parts."""
    for p, c in contributions.items():
        if c < 0:
            raise ProposalError(f"player {p} contributes a negative amount")
        if c > ledger.balances[p]:
            raise Overdraft(p, c, ledger.balances[p])
    n = len(ledger.balances)
    payback = ledger.multiplier * math.fsum(contributions.values()) / n
    balances = {p: b - contributions.get(p, 0.0) + payback for p, b in ledger.balances.items()}
    return PGLedger(balances, ledger.multiplier, ledger.contributions_history + (dict(contributions),))


def theory_winners(final_scores: Mapping[int, float]) -> frozenset[int]:
    """Everyone holding the top score wins; ties share the win."""
    if any(not math.isfinite(v) for v in final_scores.values()):
        raise ValueError("scores must be finite")
    best = max(final_scores.values())
    return frozenset(p for p, v in final_scores.items() if v == best)
