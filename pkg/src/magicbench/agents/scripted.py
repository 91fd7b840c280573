"""Deterministic rule-based players used as opponents, baselines and test oracles."""

from __future__ import annotations

import random
import re
import zlib
from collections import Counter
from typing import Any, Callable, Sequence

from ..core import GameEvent, Scenario, Stage
from ..games.theory import Move
from .actions import (
    Action,
    Choice,
    Clue,
    Contribution,
    Guess,
    ProposalAction,
    ProposalVote,
    RoleClaim,
    Vote,
    render_action,
)
from .base import Agent, Directive

CLUE_WORDS = (
    "bright", "classic", "everyday", "famous", "heavy",
    "tiny", "outdoor", "popular", "traditional", "useful",
)


def word_clue(word: str) -> str:
    """The baseline clue for ``word``: a fixed adjective picked by checksum."""
    return f"I would call it {CLUE_WORDS[zlib.crc32(word.casefold().encode()) % len(CLUE_WORDS)]}."


def usage_weight(description: str) -> float:
    m = re.search(r"\d[\d,]*(?:\.\d+)?", description)
    return float(m.group(0).replace(",", "")) if m else 1.0


def proportional_shares(total_fee: float, descriptions: dict[int, str]) -> dict[int, float]:
    weights = {p: usage_weight(d) for p, d in sorted(descriptions.items())}
    total_w = sum(weights.values())
    shares = {p: round(total_fee * w / total_w, 2) for p, w in weights.items()}
    last = max(shares)
    shares[last] = round(total_fee - sum(v for p, v in shares.items() if p != last), 2)
    return shares


def _odd_one_out(clues: dict[int, str], exclude: int, rng: random.Random) -> int:
    """Player whose clue matches fewest others; ties broken by ``rng``."""
    candidates = [p for p in clues if p != exclude]
    counts = Counter(clues.values())
    fewest = min(counts[clues[p]] for p in candidates)
    pool = sorted(p for p in candidates if counts[clues[p]] == fewest)
    return pool[0] if len(pool) == 1 else rng.choice(pool)


class ScriptedAgent(Agent):
    """Rule-based agent; its reply is a pure function of (view, directive, seed).

    ``strategy`` overrides one behaviour on top of the baseline, e.g.
    ``always_defect`` or ``fixed_contributor`` (with ``amount=``).
    """

    STRATEGIES = (
        "baseline",
        "always_cooperate",
        "always_defect",
        "tit_for_tat",
        "zero_contributor",
        "fixed_contributor",
        "proportional",
        "stubborn",
        "fixed_clue",
    )

    def __init__(self, player: int, strategy: str = "baseline", seed: int = 0, **params: Any):
        if strategy not in self.STRATEGIES:
            raise ValueError(f"unknown scripted strategy {strategy!r}")
        super().__init__(player, f"scripted:{strategy}")
        self.strategy = strategy
        self.seed = seed
        self.params = params

    def _rng(self, directive: Directive, view: Sequence[GameEvent]) -> random.Random:
        return random.Random(f"{self.seed}:{self.player}:{directive.stage.value}:{directive.round}:{len(view)}")

    def act(self, view: Sequence[GameEvent], directive: Directive) -> str:
        return render_action(self.decide(view, directive))

    def decide(self, view: Sequence[GameEvent], directive: Directive) -> Action:
        handler: Callable[[Sequence[GameEvent], Directive], Action] = getattr(self, f"_{directive.stage.value}")
        return handler(view, directive)

    # social games

    def _clue(self, view: Sequence[GameEvent], d: Directive) -> Action:
        f = d.facts
        if self.strategy == "fixed_clue":
            clues = self.params.get("clues") or ["It is something familiar."]
            return Clue(clues[(d.round - 1) % len(clues)])
        if d.scenario is Scenario.CHAMELEON and f.get("secret_word") is None:
            earlier = [text for _, text in sorted(f.get("clues", {}).items())]
            return Clue(earlier[0] if earlier else f"It is related to {f['topic']}.")
        return Clue(word_clue(f["secret_word"] if d.scenario is Scenario.CHAMELEON else f["word"]))

    def _accusation(self, view: Sequence[GameEvent], d: Directive) -> Action:
        rng = self._rng(d, view)
        f = d.facts
        if d.scenario is Scenario.CHAMELEON:
            if f.get("secret_word") is None:
                return Vote(rng.choice(d.others))
            expected = word_clue(f["secret_word"])
            off = [p for p, text in sorted(f["clues"].items()) if p != self.player and text != expected]
            return Vote(off[0] if len(off) == 1 else rng.choice(off or list(d.others)))
        last_round = max(r for r, _, _ in f["clues"])
        clues = {p: text for r, p, text in f["clues"] if r == last_round}
        return Vote(_odd_one_out(clues, self.player, rng))

    def _guess(self, view: Sequence[GameEvent], d: Directive) -> Action:
        return Guess(self.params.get("guess") or d.facts["topic"])

    def _role_probe(self, view: Sequence[GameEvent], d: Directive) -> Action:
        last_round = max(r for r, _, _ in d.facts["clues"])
        clues = {p: text for r, p, text in d.facts["clues"] if r == last_round}
        mine = clues.get(self.player)
        others_same = sum(1 for p, t in clues.items() if p != self.player and t == mine)
        return RoleClaim(others_same == 0 and len(set(clues.values())) > 1)

    # cost sharing

    def _proposal(self, view: Sequence[GameEvent], d: Directive) -> Action:
        shares = proportional_shares(d.facts["total_fee"], d.facts["descriptions"])
        return ProposalAction(shares)

    def _vote(self, view: Sequence[GameEvent], d: Directive) -> Action:
        proposals: dict[int, dict[int, float]] = d.facts["proposals"]
        mine = proposals.get(self.player)
        if self.strategy == "stubborn" or mine is None:
            return ProposalVote(self.player)
        for proposer in sorted(proposals):
            theirs = proposals[proposer]
            if all(abs(theirs[p] - mine[p]) <= 0.01 for p in mine):
                return ProposalVote(proposer)
        return ProposalVote(self.player)

    # prisoner's dilemma

    def _choice(self, view: Sequence[GameEvent], d: Directive) -> Action:
        if self.strategy == "always_defect":
            return Choice(Move.DEFECT)
        if self.strategy == "always_cooperate":
            return Choice(Move.COOPERATE)
        history: list[dict[int, str]] = d.facts.get("history", [])
        if not history:
            return Choice(Move.COOPERATE)
        last = history[-1]
        defected = sum(1 for p, m in last.items() if p != self.player and m == Move.DEFECT.value)
        return Choice(Move.DEFECT if defected * 2 > len(last) - 1 else Move.COOPERATE)

    # public good

    def _contribution(self, view: Sequence[GameEvent], d: Directive) -> Action:
        remaining = d.facts["remaining"]
        if self.strategy == "zero_contributor":
            return Contribution(0)
        amount = float(self.params.get("amount", 10))
        return Contribution(min(amount, remaining))
