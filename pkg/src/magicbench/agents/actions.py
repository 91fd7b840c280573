"""Stage actions, their text rendering, and lenient parsing of free-text replies."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Union

from ..core import MagicError, Stage
from ..games.theory import Move


@dataclass(frozen=True)
class Clue:
    text: str


@dataclass(frozen=True)
class Vote:
    target: int


@dataclass(frozen=True)
class Guess:
    word: str


@dataclass(frozen=True)
class Choice:
    move: Move


@dataclass(frozen=True)
class Contribution:
    amount: float


@dataclass(frozen=True)
class ProposalAction:
    shares: dict[int, float]

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.shares.items())))


@dataclass(frozen=True)
class ProposalVote:
    proposer: int


@dataclass(frozen=True)
class RoleClaim:
    is_special: bool


Action = Union[Clue, Vote, Guess, Choice, Contribution, ProposalAction, ProposalVote, RoleClaim]

_TYPE_NAMES = {
    Clue: "clue",
    Vote: "vote",
    Guess: "guess",
    Choice: "choice",
    Contribution: "contribution",
    ProposalAction: "proposal",
    ProposalVote: "proposal_vote",
    RoleClaim: "role_claim",
}
_TYPES_BY_NAME = {v: k for k, v in _TYPE_NAMES.items()}

STAGE_ACTIONS: dict[Stage, type] = {
    Stage.CLUE: Clue,
    Stage.ACCUSATION: Vote,
    Stage.GUESS: Guess,
    Stage.CHOICE: Choice,
    Stage.CONTRIBUTION: Contribution,
    Stage.PROPOSAL: ProposalAction,
    Stage.VOTE: ProposalVote,
    Stage.ROLE_PROBE: RoleClaim,
}


class InvalidAction(MagicError, ValueError):
    """A reply that cannot be turned into a legal action; the engine re-prompts."""


class Ambiguous(InvalidAction):
    pass


class NoMatch(InvalidAction):
    pass


class SelfVoteAction(InvalidAction):
    pass


class NegativeAmount(InvalidAction):
    pass


@dataclass(frozen=True)
class ParseContext:
    player: int
    players: tuple[int, ...]
    total_fee: float | None = None


def action_to_json(action: Action | None) -> dict[str, Any] | None:
    if action is None:
        return None
    kind = _TYPE_NAMES[type(action)]
    if isinstance(action, Clue):
        return {"type": kind, "text": action.text}
    if isinstance(action, Vote):
        return {"type": kind, "target": action.target}
    if isinstance(action, Guess):
        return {"type": kind, "word": action.word}
    if isinstance(action, Choice):
        return {"type": kind, "move": action.move.value}
    if isinstance(action, Contribution):
        return {"type": kind, "amount": action.amount}
    if isinstance(action, ProposalAction):
        return {"type": kind, "shares": {str(k): v for k, v in sorted(action.shares.items())}}
    if isinstance(action, ProposalVote):
        return {"type": kind, "proposer": action.proposer}
    return {"type": kind, "is_special": action.is_special}


def action_from_json(data: dict[str, Any] | None) -> Action | None:
    if data is None:
        return None
    cls = _TYPES_BY_NAME[data["type"]]
    if cls is Choice:
        return Choice(Move(data["move"]))
    if cls is ProposalAction:
        return ProposalAction({int(k): float(v) for k, v in data["shares"].items()})
    fields = {k: v for k, v in data.items() if k != "type"}
    return cls(**fields)


def _fmt_amount(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".") if x != int(x) else str(int(x))


def render_action(action: Action) -> str:
    """Canonical reply text; ``parse_action`` maps it back to ``action``."""
    if isinstance(action, Clue):
        return action.text
    if isinstance(action, Vote):
        return f"I vote for Player {action.target}."
    if isinstance(action, Guess):
        return f"My guess is: {action.word}"
    if isinstance(action, Choice):
        return action.move.value
    if isinstance(action, Contribution):
        return f"I contribute {_fmt_amount(action.amount)}"
    if isinstance(action, ProposalAction):
        return ", ".join(f"Player {p}: {_fmt_amount(v)}" for p, v in sorted(action.shares.items()))
    if isinstance(action, ProposalVote):
        return f"I vote for Player {action.proposer}'s proposal."
    return "Yes" if action.is_special else "No"


_NUM = r"(-?\d[\d,]*(?:\.\d+)?|-?\.\d+)"
_DEFECT = re.compile(r"\bdefect(?:s|ed|ing)?\b", re.I)
_COOPERATE = re.compile(r"\bco-?operat(?:e|es|ed|ing)\b", re.I)
_CONTRIBUTE = re.compile(r"\bI\s+(?:will\s+)?contribute\s*:?\s*\$?\s*" + _NUM, re.I)
_PLAYER = re.compile(r"\bplayer\s*(\d+)", re.I)
_VOTE_FOR = re.compile(r"\bvot(?:e|ing)\s+(?:for\s+)?(?:is\s+)?player\s*(\d+)", re.I)
_YES = re.compile(r"\byes\b", re.I)
_NO = re.compile(r"\bno\b", re.I)
_AM_NOT = re.compile(r"\bI\s*(?:am|'m)\s+not\s+(?:the\s+)?undercover\b", re.I)
_AM = re.compile(r"\bI\s*(?:am|'m)\s+(?:the\s+)?undercover\b", re.I)
_GUESS = re.compile(
    r"(?:my guess is|i guess(?: that)?(?: the secret (?:word|code) is)?|the secret (?:word|code) is|guess)\s*:?\s*(.+)",
    re.I | re.S,
)
_OWN_PREFIX = re.compile(r"^\s*(?:player\s*\d+|clue)\s*:\s*", re.I)


def _number(text: str) -> float:
    return float(text.replace(",", ""))


def _player_mentions(text: str, players: tuple[int, ...]) -> list[int]:
    seen: list[int] = []
    for m in _PLAYER.finditer(text):
        p = int(m.group(1))
        if p not in seen:
            seen.append(p)
    unknown = [p for p in seen if p not in players]
    if unknown:
        raise NoMatch(f"reply names unknown player(s) {unknown}")
    return seen


def _pick_player(raw: str, ctx: ParseContext, allow_self: bool) -> int:
    explicit = {int(m.group(1)) for m in _VOTE_FOR.finditer(raw)}
    if len(explicit) > 1:
        raise Ambiguous(f"votes for several players: {sorted(explicit)}")
    if explicit:
        target = explicit.pop()
        if target not in ctx.players:
            raise NoMatch(f"vote names unknown player {target}")
    else:
        mentions = _player_mentions(raw, ctx.players)
        if not mentions and raw.strip().isdigit():
            mentions = [int(raw.strip())]
            if mentions[0] not in ctx.players:
                raise NoMatch(f"vote names unknown player {mentions[0]}")
        others = [p for p in mentions if p != ctx.player]
        if len(others) > 1:
            raise Ambiguous(f"reply mentions several players: {others}")
        if others:
            target = others[0]
        elif ctx.player in mentions:
            target = ctx.player
        else:
            raise NoMatch("no player named in reply")
    if target == ctx.player and not allow_self:
        raise SelfVoteAction(f"player {ctx.player} cannot vote for themself")
    return target


def parse_action(raw: str, stage: Stage, ctx: ParseContext) -> Action:
    text = raw.strip()
    if stage is Stage.CLUE:
        text = _OWN_PREFIX.sub("", text).strip()
        if not text:
            raise NoMatch("empty clue")
        return Clue(text)
    if stage is Stage.ACCUSATION:
        return Vote(_pick_player(text, ctx, allow_self=False))
    if stage is Stage.VOTE:
        return ProposalVote(_pick_player(text, ctx, allow_self=True))
    if stage is Stage.GUESS:
        m = _GUESS.search(text)
        word = m.group(1) if m else text
        word = word.strip().splitlines()[0] if word.strip() else ""
        word = word.strip().strip("\"'“”‘’`*").rstrip(".!").strip().strip("\"'“”‘’`*")
        if not word:
            raise NoMatch("empty guess")
        return Guess(word)
    if stage is Stage.CHOICE:
        d, c = bool(_DEFECT.search(text)), bool(_COOPERATE.search(text))
        if d and c:
            raise Ambiguous("reply mentions both defect and cooperate")
        if not (d or c):
            raise NoMatch("reply mentions neither defect nor cooperate")
        return Choice(Move.DEFECT if d else Move.COOPERATE)
    if stage is Stage.CONTRIBUTION:
        amounts = {_number(m.group(1)) for m in _CONTRIBUTE.finditer(text)}
        if not amounts:
            raise NoMatch("expected 'I contribute <amount>'")
        if len(amounts) > 1:
            raise Ambiguous(f"several contributions stated: {sorted(amounts)}")
        amount = amounts.pop()
        if amount < 0:
            raise NegativeAmount(f"negative contribution {amount}")
        return Contribution(amount)
    if stage is Stage.PROPOSAL:
        shares: dict[int, float] = {}
        for p in ctx.players:
            m = re.search(rf"\bplayer\s*{p}\b(?:(?!player)[^\d\-])*?{_NUM}", text, re.I)
            if not m:
                raise NoMatch(f"no amount for Player {p}")
            shares[p] = _number(m.group(1))
        if any(v < 0 for v in shares.values()):
            raise NegativeAmount("negative share in proposal")
        if ctx.total_fee is not None and abs(sum(shares.values()) - ctx.total_fee) > 0.01:
            raise InvalidAction(f"shares sum to {sum(shares.values()):g}, expected {ctx.total_fee:g}")
        return ProposalAction(shares)
    if stage is Stage.ROLE_PROBE:
        if _AM_NOT.search(text):
            return RoleClaim(False)
        yes, no = bool(_YES.search(text)), bool(_NO.search(text))
        if yes and not no:
            return RoleClaim(True)
        if no and not yes:
            return RoleClaim(False)
        if _AM.search(text) and not (yes or no):
            return RoleClaim(True)
        raise Ambiguous("expected a yes or no answer") if (yes and no) else NoMatch("expected yes or no")
    raise NoMatch(f"stage {stage.value} takes no action")
