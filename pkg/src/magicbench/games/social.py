"""Chameleon and Undercover: state transitions, outcome codes and role credits."""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Mapping

from ..core import MagicError, Role, Scenario
from .voting import tally_votes

# Outcome codes, indexed into the credit tables below.
CHAMELEON_NON_CHAMELEON_WON = 0
CHAMELEON_WON = 1
CHAMELEON_EVEN_VOTE = 2
CHAMELEON_GUESSED_RIGHT = 3

UNDERCOVER_WON = 0
UNDERCOVER_CIVILIAN_WON = 1
UNDERCOVER_EVEN_VOTE = 2

CHAMELEON_CREDITS: dict[Role, tuple[int, ...]] = {
    Role.CHAMELEON: (0, 1, 2, 1),
    Role.NON_CHAMELEON: (2, 1, 0, 1),
}
UNDERCOVER_CREDITS: dict[Role, tuple[int, ...]] = {
    Role.UNDERCOVER: (3, 0, 2),
    Role.CIVILIAN: (0, 3, 1),
}
CODE_RANGE = {Scenario.CHAMELEON: range(4), Scenario.UNDERCOVER: range(3)}


class MissingGuess(MagicError, ValueError):
    pass


class CodeOutOfRange(MagicError, ValueError):
    pass


def normalize_word(text: str) -> str:
    return " ".join(text.split()).casefold()


def guess_matches(guess: str, secret_word: str) -> bool:
    """Case-insensitive comparison after trimming and collapsing whitespace."""
    return normalize_word(guess) == normalize_word(secret_word)


def resolve_chameleon(
    votes: Mapping[int, int],
    guess: str | None,
    chameleon: int,
    secret_word: str,
) -> int:
    result = tally_votes(votes)
    if result.is_tie:
        return CHAMELEON_EVEN_VOTE
    if result.winner != chameleon:
        return CHAMELEON_WON
    if guess is None:
        raise MissingGuess("the chameleon was caught but no guess was supplied")
    return CHAMELEON_GUESSED_RIGHT if guess_matches(guess, secret_word) else CHAMELEON_NON_CHAMELEON_WON


def resolve_undercover(votes: Mapping[int, int], undercover: int) -> int:
    result = tally_votes(votes)
    if result.is_tie:
        return UNDERCOVER_EVEN_VOTE
    return UNDERCOVER_CIVILIAN_WON if result.winner == undercover else UNDERCOVER_WON


def role_credit(scenario: Scenario, role: Role, code: int) -> int:
    tables = {Scenario.CHAMELEON: CHAMELEON_CREDITS, Scenario.UNDERCOVER: UNDERCOVER_CREDITS}
    try:
        table = tables[scenario][role]
    except KeyError:
        raise CodeOutOfRange(f"no credit table for {scenario.value}/{role.value}") from None
    if code not in CODE_RANGE[scenario]:
        raise CodeOutOfRange(f"code {code} outside {scenario.value} range")
    return table[code]


class ChameleonStage(str, enum.Enum):
    CLUE = "clue"
    ACCUSATION = "accusation"
    GUESS = "guess"
    DONE = "done"


@dataclass(frozen=True)
class ChameleonState:
    players: tuple[int, ...]
    chameleon: int
    secret_word: str
    stage: ChameleonStage = ChameleonStage.CLUE
    clues: dict[int, str] = field(default_factory=dict)
    votes: dict[int, int] = field(default_factory=dict)
    guess: str | None = None

    def give_clue(self, player: int, clue: str) -> ChameleonState:
        if self.stage is not ChameleonStage.CLUE or player in self.clues:
            raise MagicError(f"player {player} cannot give a clue now")
        clues = {**self.clues, player: clue}
        stage = ChameleonStage.ACCUSATION if len(clues) == len(self.players) else ChameleonStage.CLUE
        return dataclasses.replace(self, clues=clues, stage=stage)

    def cast_vote(self, voter: int, target: int) -> ChameleonState:
        if self.stage is not ChameleonStage.ACCUSATION or voter in self.votes:
            raise MagicError(f"player {voter} cannot vote now")
        tally_votes({voter: target}, self.players)
        votes = {**self.votes, voter: target}
        stage = self.stage
        if len(votes) == len(self.players):
            caught = tally_votes(votes).top == {self.chameleon}
            stage = ChameleonStage.GUESS if caught else ChameleonStage.DONE
        return dataclasses.replace(self, votes=votes, stage=stage)

    def make_guess(self, guess: str) -> ChameleonState:
        if self.stage is not ChameleonStage.GUESS:
            raise MagicError("no guess stage in this game")
        return dataclasses.replace(self, guess=guess, stage=ChameleonStage.DONE)

    def outcome(self) -> int:
        if self.stage is not ChameleonStage.DONE:
            raise MagicError("game is not finished")
        return resolve_chameleon(self.votes, self.guess, self.chameleon, self.secret_word)


@dataclass(frozen=True)
class UndercoverState:
    players: tuple[int, ...]
    undercover: int
    words: tuple[str, str]  # (civilian_word, undercover_word)
    rounds: int
    round: int = 1
    clues: tuple[tuple[int, int, str], ...] = ()  # (round, player, text)
    self_probes: dict[int, bool | None] = field(default_factory=dict)
    votes: dict[int, int] = field(default_factory=dict)

    def word_of(self, player: int) -> str:
        return self.words[1] if player == self.undercover else self.words[0]

    @property
    def clues_done(self) -> bool:
        return self.round > self.rounds

    def give_clue(self, player: int, clue: str) -> UndercoverState:
        if self.clues_done:
            raise MagicError("clue rounds are over")
        if any(r == self.round and p == player for r, p, _ in self.clues):
            raise MagicError(f"player {player} already gave a clue in round {self.round}")
        clues = self.clues + ((self.round, player, clue),)
        rnd = self.round
        if sum(1 for r, _, _ in clues if r == rnd) == len(self.players):
            rnd += 1
        return dataclasses.replace(self, clues=clues, round=rnd)

    def record_probe(self, player: int, claims_undercover: bool | None) -> UndercoverState:
        if not self.clues_done or self.votes:
            raise MagicError("role probes happen after the last clue round and before voting")
        return dataclasses.replace(self, self_probes={**self.self_probes, player: claims_undercover})

    def cast_vote(self, voter: int, target: int) -> UndercoverState:
        if not self.clues_done or voter in self.votes:
            raise MagicError(f"player {voter} cannot vote now")
        tally_votes({voter: target}, self.players)
        return dataclasses.replace(self, votes={**self.votes, voter: target})

    def outcome(self) -> int:
        if len(self.votes) != len(self.players):
            raise MagicError("voting is not finished")
        return resolve_undercover(self.votes, self.undercover)
