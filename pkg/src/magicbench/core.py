"""Shared domain types, topic-setting validation and per-player transcript views."""

from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Union

TOPIC_SCHEMA = "magic-topic/1"
DEFAULT_PLAYERS = 3
MODERATOR = 0  # actor id used for moderator events; players are 1..N


class MagicError(Exception):
    """Base class for all errors raised by this package."""


class SettingError(MagicError, ValueError):
    pass


class MissingField(SettingError):
    pass


class PositionOutOfRange(SettingError):
    pass


class NonPositiveMultiplier(SettingError):
    pass


class WrongDescriptionCount(SettingError):
    pass


class UnknownViewer(MagicError, KeyError):
    pass


class Scenario(str, enum.Enum):
    CHAMELEON = "chameleon"
    UNDERCOVER = "undercover"
    COST_SHARING = "cost_sharing"
    PRISONERS_DILEMMA = "prisoners_dilemma"
    PUBLIC_GOOD = "public_good"

    @property
    def is_social(self) -> bool:
        return self in (Scenario.CHAMELEON, Scenario.UNDERCOVER)


class Role(str, enum.Enum):
    CHAMELEON = "chameleon"
    NON_CHAMELEON = "non_chameleon"
    UNDERCOVER = "undercover"
    CIVILIAN = "civilian"
    COST_SHARER = "cost_sharer"
    PRISONER = "prisoner"
    CONTRIBUTOR = "contributor"


SCENARIO_ROLES: dict[Scenario, tuple[Role, ...]] = {
    Scenario.CHAMELEON: (Role.CHAMELEON, Role.NON_CHAMELEON),
    Scenario.UNDERCOVER: (Role.UNDERCOVER, Role.CIVILIAN),
    Scenario.COST_SHARING: (Role.COST_SHARER,),
    Scenario.PRISONERS_DILEMMA: (Role.PRISONER,),
    Scenario.PUBLIC_GOOD: (Role.CONTRIBUTOR,),
}

DEFAULT_ROUNDS: dict[Scenario, int] = {
    Scenario.CHAMELEON: 1,
    Scenario.UNDERCOVER: 2,
    Scenario.COST_SHARING: 5,
    Scenario.PRISONERS_DILEMMA: 5,
    Scenario.PUBLIC_GOOD: 5,
}


class Stage(str, enum.Enum):
    CLUE = "clue"
    ACCUSATION = "accusation"
    GUESS = "guess"
    PROPOSAL = "proposal"
    VOTE = "vote"
    CHOICE = "choice"
    CONTRIBUTION = "contribution"
    PGM_ANALYSIS = "pgm_analysis"
    ROLE_PROBE = "role_probe"
    MODERATOR_NOTE = "moderator_note"


DECISION_STAGES = frozenset(
    {Stage.CLUE, Stage.ACCUSATION, Stage.GUESS, Stage.PROPOSAL, Stage.VOTE, Stage.CHOICE, Stage.CONTRIBUTION}
)


def player_name(pid: int) -> str:
    return f"Player {pid}"


# ---------------------------------------------------------------------------
# Topic settings


@dataclass(frozen=True)
class ChameleonPayload:
    topic: str
    secret_word: str
    chameleon_position: int


@dataclass(frozen=True)
class UndercoverPayload:
    civilian_word: str
    undercover_word: str
    undercover_position: int


@dataclass(frozen=True)
class CostSharingPayload:
    total_fee: float
    usage_descriptions: tuple[str, ...]
    standalone_costs: tuple[float, ...] | None = None


@dataclass(frozen=True)
class PrisonersDilemmaPayload:
    cooperate: float
    defect: float
    one_defect: float
    two_defect: float


@dataclass(frozen=True)
class PublicGoodPayload:
    multiplier: float
    initial_balance: float = 100.0


Payload = Union[
    ChameleonPayload, UndercoverPayload, CostSharingPayload, PrisonersDilemmaPayload, PublicGoodPayload
]

PAYLOAD_TYPES: dict[Scenario, type] = {
    Scenario.CHAMELEON: ChameleonPayload,
    Scenario.UNDERCOVER: UndercoverPayload,
    Scenario.COST_SHARING: CostSharingPayload,
    Scenario.PRISONERS_DILEMMA: PrisonersDilemmaPayload,
    Scenario.PUBLIC_GOOD: PublicGoodPayload,
}


@dataclass(frozen=True)
class TopicSetting:
    """One competition: scenario, challenger seat and the scenario payload.

    ``rounds`` of ``None`` means "use the scenario default"; validation fills it in.
    """

    scenario: Scenario
    challenger_position: int
    payload: Payload
    rounds: int | None = None
    n_players: int = DEFAULT_PLAYERS
    id: str = ""

    @property
    def players(self) -> tuple[int, ...]:
        return tuple(range(1, self.n_players + 1))

    def hidden_player(self) -> int | None:
        if isinstance(self.payload, ChameleonPayload):
            return self.payload.chameleon_position
        if isinstance(self.payload, UndercoverPayload):
            return self.payload.undercover_position
        return None

    def role_of(self, pid: int) -> Role:
        hidden = self.hidden_player()
        if self.scenario is Scenario.CHAMELEON:
            return Role.CHAMELEON if pid == hidden else Role.NON_CHAMELEON
        if self.scenario is Scenario.UNDERCOVER:
            return Role.UNDERCOVER if pid == hidden else Role.CIVILIAN
        return SCENARIO_ROLES[self.scenario][0]

    @property
    def challenger_role(self) -> Role:
        return self.role_of(self.challenger_position)

    def to_dict(self) -> dict[str, Any]:
        payload = dataclasses.asdict(self.payload)
        for key, value in payload.items():
            if isinstance(value, tuple):
                payload[key] = list(value)
        return {
            "id": self.id,
            "scenario": self.scenario.value,
            "challenger_position": self.challenger_position,
            "rounds": self.rounds,
            "n_players": self.n_players,
            "payload": payload,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TopicSetting:
        for key in ("scenario", "challenger_position", "payload"):
            if key not in data:
                raise MissingField(key)
        scenario = Scenario(data["scenario"])
        payload_cls = PAYLOAD_TYPES[scenario]
        raw = dict(data["payload"])
        kwargs: dict[str, Any] = {}
        for f in dataclasses.fields(payload_cls):
            if f.name in raw:
                value = raw[f.name]
                if isinstance(value, list):
                    value = tuple(value)
                kwargs[f.name] = value
            elif f.default is dataclasses.MISSING:
                raise MissingField(f"payload.{f.name}")
        return cls(
            scenario=scenario,
            challenger_position=int(data["challenger_position"]),
            payload=payload_cls(**kwargs),
            rounds=data.get("rounds"),
            n_players=int(data.get("n_players", DEFAULT_PLAYERS)),
            id=str(data.get("id", "")),
        )


def _check_position(name: str, pos: Any, n: int) -> None:
    if not isinstance(pos, int) or isinstance(pos, bool) or not 1 <= pos <= n:
        raise PositionOutOfRange(f"{name}={pos!r} not in 1..{n}")


def validate_topic_setting(setting: TopicSetting) -> TopicSetting:
    """Check a setting and return it with defaults filled in.

    Idempotent: validating a validated setting returns an equal value.
    """
    n = setting.n_players
    if n < 2:
        raise PositionOutOfRange(f"need at least 2 players, got {n}")
    expected = PAYLOAD_TYPES[setting.scenario]
    if not isinstance(setting.payload, expected):
        raise MissingField(f"{setting.scenario.value} setting needs a {expected.__name__}")
    _check_position("challenger_position", setting.challenger_position, n)

    p = setting.payload
    if isinstance(p, ChameleonPayload):
        if not p.topic or not p.secret_word:
            raise MissingField("topic/secret_word")
        _check_position("chameleon_position", p.chameleon_position, n)
    elif isinstance(p, UndercoverPayload):
        if not p.civilian_word or not p.undercover_word:
            raise MissingField("civilian_word/undercover_word")
        _check_position("undercover_position", p.undercover_position, n)
    elif isinstance(p, CostSharingPayload):
        if not p.total_fee > 0:
            raise SettingError(f"total_fee must be positive, got {p.total_fee}")
        if len(p.usage_descriptions) != n:
            raise WrongDescriptionCount(f"expected {n} usage descriptions, got {len(p.usage_descriptions)}")
        if p.standalone_costs is not None:
            if len(p.standalone_costs) != n:
                raise WrongDescriptionCount(f"expected {n} standalone costs, got {len(p.standalone_costs)}")
            if any(c <= 0 for c in p.standalone_costs):
                raise SettingError("standalone costs must be positive")
    elif isinstance(p, PrisonersDilemmaPayload):
        if min(p.cooperate, p.defect, p.one_defect, p.two_defect) < 0:
            raise SettingError("prisoner's dilemma scores must be >= 0")
    elif isinstance(p, PublicGoodPayload):
        if not p.multiplier > 0:
            raise NonPositiveMultiplier(f"multiplier must be > 0, got {p.multiplier}")
        if p.initial_balance < 0:
            raise SettingError("initial_balance must be >= 0")

    rounds = setting.rounds if setting.rounds is not None else DEFAULT_ROUNDS[setting.scenario]
    if rounds < 1:
        raise SettingError(f"rounds must be >= 1, got {rounds}")
    return dataclasses.replace(setting, rounds=rounds)


def load_topic_fixture(path: str | Path) -> list[TopicSetting]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != TOPIC_SCHEMA:
        raise SettingError(f"{path}: expected schema {TOPIC_SCHEMA!r}, got {doc.get('schema')!r}")
    return [validate_topic_setting(TopicSetting.from_dict(item)) for item in doc["settings"]]


def dump_topic_fixture(settings: Iterable[TopicSetting], scenario: Scenario) -> str:
    doc = {
        "schema": TOPIC_SCHEMA,
        "scenario": scenario.value,
        "settings": [s.to_dict() for s in settings],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# Events and transcripts


@dataclass(frozen=True)
class Visibility:
    """Who may see an event: everyone, a fixed set of players, or only the moderator."""

    kind: str  # "public" | "private" | "moderator"
    players: tuple[int, ...] = ()

    @classmethod
    def public(cls) -> Visibility:
        return cls("public")

    @classmethod
    def private(cls, *players: int) -> Visibility:
        return cls("private", tuple(sorted(set(players))))

    @classmethod
    def moderator(cls) -> Visibility:
        return cls("moderator")

    def visible_to(self, pid: int) -> bool:
        if self.kind == "public":
            return True
        if self.kind == "private":
            return pid in self.players
        return False

    def to_json(self) -> Any:
        if self.kind == "private":
            return {"private": list(self.players)}
        return self.kind

    @classmethod
    def from_json(cls, value: Any) -> Visibility:
        if isinstance(value, dict):
            return cls.private(*value["private"])
        if value not in ("public", "moderator"):
            raise ValueError(f"bad visibility {value!r}")
        return cls(value)


@dataclass(frozen=True)
class GameEvent:
    game_id: str
    turn: int
    seq: int
    stage: Stage
    actor: int  # MODERATOR or a player id
    visibility: Visibility
    raw_text: str
    parsed_action: Any = None  # agents.actions.Action or None

    def __post_init__(self) -> None:
        if self.stage in (Stage.PGM_ANALYSIS, Stage.ROLE_PROBE):
            v = self.visibility
            if not (v.kind == "moderator" or (v.kind == "private" and v.players == (self.actor,))):
                raise ValueError(f"{self.stage.value} events must be moderator-only or private to the actor")


@dataclass
class Transcript:
    """Append-only event log for one game."""

    game_id: str
    setting: TopicSetting
    events: list[GameEvent] = field(default_factory=list)
    outcome: Any = None  # engine.Outcome once the game ends

    def append(
        self,
        stage: Stage,
        actor: int,
        visibility: Visibility,
        raw_text: str,
        parsed_action: Any = None,
        turn: int = 0,
    ) -> GameEvent:
        if self.outcome is not None:
            raise MagicError(f"{self.game_id}: transcript is closed")
        if self.events and turn < self.events[-1].turn:
            raise MagicError(f"{self.game_id}: turn went backwards ({turn} < {self.events[-1].turn})")
        if visibility.kind == "private":
            bad = [p for p in visibility.players if p not in self.setting.players]
            if bad:
                raise MagicError(f"{self.game_id}: private visibility names non-participants {bad}")
        event = GameEvent(
            game_id=self.game_id,
            turn=turn,
            seq=len(self.events),
            stage=stage,
            actor=actor,
            visibility=visibility,
            raw_text=raw_text,
            parsed_action=parsed_action,
        )
        self.events.append(event)
        return event

    def close(self, outcome: Any) -> None:
        if self.outcome is not None:
            raise MagicError(f"{self.game_id}: outcome already set")
        self.outcome = outcome


def view_for(transcript: Transcript, viewer: int) -> list[GameEvent]:
    """Events ``viewer`` is allowed to see, in transcript order."""
    if viewer not in transcript.setting.players:
        raise UnknownViewer(viewer)
    return [e for e in transcript.events if e.visibility.visible_to(viewer)]
