from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..core import GameEvent, Scenario, Stage


@dataclass(frozen=True)
class Directive:
    """What the moderator asks of one player at one decision point.

    ``facts`` only carries information the player is entitled to: its own word or
    role, public clues, announced round results and the like.
    """

    scenario: Scenario
    stage: Stage
    player: int
    players: tuple[int, ...]
    round: int
    prompt: str
    facts: Mapping[str, Any] = field(default_factory=dict)
    template_values: Mapping[str, Any] = field(default_factory=dict)
    retry_note: str | None = None

    @property
    def others(self) -> tuple[int, ...]:
        return tuple(p for p in self.players if p != self.player)


class Agent:
    """A seat at the table. One instance plays exactly one game."""

    uses_pgm = False

    def __init__(self, player: int, label: str):
        self.player = player
        self.label = label
        self._bound_to: str | None = None

    def bind(self, game_id: str) -> None:
        if self._bound_to is not None and self._bound_to != game_id:
            raise RuntimeError(f"agent for player {self.player} already plays {self._bound_to}")
        self._bound_to = game_id

    def act(self, view: Sequence[GameEvent], directive: Directive) -> str:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(player={self.player}, label={self.label!r})"
