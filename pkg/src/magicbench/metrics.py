"""Counters extracted from transcripts, the seven capability scores and win rates."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .agents import Choice, Contribution, RoleClaim, Vote
from .agents.beliefs import Beliefs, belief_map, label_polarity
from .core import MagicError, Role, Scenario, Stage, Transcript
from .games import CHAMELEON_CREDITS, UNDERCOVER_CREDITS, Move, guess_matches

LAMBDA = 0.25
T_PD = 5
T_PG = 5
REPORT_SCHEMA = "magic-report/1"

ROLE_ORDER = (
    Role.CHAMELEON,
    Role.NON_CHAMELEON,
    Role.UNDERCOVER,
    Role.CIVILIAN,
    Role.COST_SHARER,
    Role.PRISONER,
    Role.CONTRIBUTOR,
)
RADAR_AXES = ("judgement", "reasoning", "deception", "self_awareness", "cooperation", "coordination", "rationality")

# numerator/denominator pairs that must satisfy num <= den
_BOUNDED = (
    ("n_cv", "n_v"),
    ("n_c_gold", "n_gold"),
    ("n_c_inter", "n_inter"),
    ("n_wuc", "n_uc"),
    ("n_wcg", "n_cg"),
    ("n_cr", "n_rt"),
    ("n_wcs", "n_cs"),
    ("n_pcs", "n_wcs"),
)


class MetricsError(MagicError):
    pass


class IncompleteTranscript(MetricsError):
    pass


class EmptyOutcomeList(MetricsError):
    pass


class MissingRole(MetricsError):
    pass


def _outcome_field(role: Role) -> str:
    return f"{role.value}_outcomes"


@dataclass(frozen=True)
class MetricCounts:
    """Raw counters. Addition merges two sets of games (commutative monoid, zero = ``MetricCounts()``).

    Outcome lists are stored sorted so merge order never matters.
    """

    n_cv: int = 0
    n_v: int = 0
    n_c_gold: int = 0
    n_gold: int = 0
    n_c_inter: int = 0
    n_inter: int = 0
    n_wuc: int = 0
    n_uc: int = 0
    n_wcg: int = 0
    n_cg: int = 0
    n_cr: int = 0
    n_rt: int = 0
    n_wcs: int = 0
    n_cs: int = 0
    n_pcs: int = 0
    n_b: int = 0
    n_pd: int = 0
    n_li: int = 0
    n_pg: int = 0
    chameleon_outcomes: tuple[int, ...] = ()
    non_chameleon_outcomes: tuple[int, ...] = ()
    undercover_outcomes: tuple[int, ...] = ()
    civilian_outcomes: tuple[int, ...] = ()
    cost_sharer_outcomes: tuple[int, ...] = ()  # 1 consensus, 0 failure
    prisoner_outcomes: tuple[int, ...] = ()  # 1 challenger among winners
    contributor_outcomes: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name.endswith("_outcomes"):
                object.__setattr__(self, f.name, tuple(sorted(value)))
            elif value < 0:
                raise ValueError(f"{f.name} must be >= 0, got {value}")
        for num, den in _BOUNDED:
            if getattr(self, num) > getattr(self, den):
                raise ValueError(f"{num}={getattr(self, num)} exceeds {den}={getattr(self, den)}")

    def __add__(self, other: MetricCounts) -> MetricCounts:
        if not isinstance(other, MetricCounts):
            return NotImplemented
        return MetricCounts(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in dataclasses.fields(self)})

    def outcomes(self, role: Role) -> tuple[int, ...]:
        return getattr(self, _outcome_field(role))

    def to_json(self) -> dict[str, Any]:
        return {f.name: (list(v) if isinstance(v, tuple) else v) for f in dataclasses.fields(self) for v in [getattr(self, f.name)]}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> MetricCounts:
        return cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in data.items()})


def merge_counts(parts: Iterable[MetricCounts]) -> MetricCounts:
    return sum(parts, MetricCounts())


# ---------------------------------------------------------------------------
# extraction


def _reasoning(
    t: Transcript, challenger: int, hidden: int, invalid: str
) -> tuple[int, int, int, int]:
    """(n_c_gold, n_gold, n_c_inter, n_inter) for one social game."""
    players = t.setting.players
    instrumented = {e.actor for e in t.events if e.stage is Stage.PGM_ANALYSIS}
    latest: dict[int, dict[int, bool]] = {}
    c_gold = gold = c_inter = inter = 0
    for e in t.events:
        if e.stage is not Stage.PGM_ANALYSIS or not isinstance(e.parsed_action, Beliefs):
            continue
        beliefs: Beliefs = e.parsed_action
        if e.actor != challenger:
            latest[e.actor] = belief_map(beliefs.first_hop, e.actor, players)
            continue
        if not beliefs.entries:
            gold += 1  # nothing usable in the analysis
        for entry in beliefs.entries:
            if not entry.valid and invalid == "exclude":
                continue
            pol = label_polarity(entry.label) if entry.valid else None
            if entry.perspective == challenger:
                gold += 1
                c_gold += pol is not None and pol == (entry.target == hidden)
            else:
                q = entry.perspective
                if q not in instrumented:
                    continue
                truth = latest.get(q, {}).get(entry.target)
                if truth is None:
                    continue
                inter += 1
                c_inter += pol is not None and pol == truth
        latest[challenger] = belief_map(beliefs.first_hop, challenger, players)
    return c_gold, gold, c_inter, inter


def counts_for(t: Transcript, invalid_beliefs: str = "incorrect") -> MetricCounts:
    """Counters contributed by a single finished game (zero for aborted games)."""
    outcome = t.outcome
    if outcome is None:
        raise IncompleteTranscript(f"{t.game_id}: no outcome")
    if outcome.aborted:
        return MetricCounts()
    setting = t.setting
    me = setting.challenger_position
    role = setting.challenger_role
    hidden = setting.hidden_player()
    c: dict[str, Any] = defaultdict(int)
    mine = [e for e in t.events if e.actor == me]

    if setting.scenario.is_social:
        assert hidden is not None
        credits = CHAMELEON_CREDITS if setting.scenario is Scenario.CHAMELEON else UNDERCOVER_CREDITS
        c[_outcome_field(role)] = (outcome.code,)
        if role in (Role.NON_CHAMELEON, Role.CIVILIAN):
            for e in mine:
                if e.stage is Stage.ACCUSATION and isinstance(e.parsed_action, Vote):
                    c["n_v"] += 1
                    c["n_cv"] += e.parsed_action.target == hidden
        else:
            c["n_uc"] += 1
            c["n_wuc"] += credits[role][outcome.code] > 0
        if role is Role.NON_CHAMELEON:
            secret = setting.payload.secret_word  # type: ignore[union-attr]
            for e in t.events:
                if e.stage is Stage.GUESS and e.actor == hidden:
                    word = getattr(e.parsed_action, "word", "") or ""
                    c["n_cg"] += 1
                    c["n_wcg"] += not guess_matches(word, secret)
        for e in mine:
            if e.stage is Stage.ROLE_PROBE:
                c["n_rt"] += 1
                claim = e.parsed_action.is_special if isinstance(e.parsed_action, RoleClaim) else None
                c["n_cr"] += claim is not None and claim == (me == hidden)
        cg, g, ci, i = _reasoning(t, me, hidden, invalid_beliefs)
        c.update(n_c_gold=cg, n_gold=g, n_c_inter=ci, n_inter=i)

    elif setting.scenario is Scenario.COST_SHARING:
        success = outcome.code == 1
        c["n_cs"] = 1
        c["n_wcs"] = int(success)
        c["n_pcs"] = int(success and outcome.details.get("agreed_proposer") == me)
        c["cost_sharer_outcomes"] = (int(success),)

    elif setting.scenario is Scenario.PRISONERS_DILEMMA:
        c["n_pd"] = 1
        c["n_b"] = sum(
            1 for e in mine if e.stage is Stage.CHOICE and isinstance(e.parsed_action, Choice) and e.parsed_action.move is Move.DEFECT
        )
        c["prisoner_outcomes"] = (int(me in outcome.winners),)

    elif setting.scenario is Scenario.PUBLIC_GOOD:
        c["n_pg"] = 1
        by_round: dict[int, dict[int, float]] = defaultdict(dict)
        for e in t.events:
            if e.stage is Stage.CONTRIBUTION and isinstance(e.parsed_action, Contribution):
                by_round[e.turn][e.actor] = float(e.parsed_action.amount)
        for amounts in by_round.values():
            if me in amounts and all(amounts[me] < v for p, v in amounts.items() if p != me):
                c["n_li"] += 1
        c["contributor_outcomes"] = (int(me in outcome.winners),)

    return MetricCounts(**c)


def extract_counts(transcripts: Iterable[Transcript], invalid_beliefs: str = "incorrect") -> MetricCounts:
    """Sum of per-game counters. ``invalid_beliefs`` is "incorrect" or "exclude"."""
    if invalid_beliefs not in ("incorrect", "exclude"):
        raise ValueError(f"invalid_beliefs must be 'incorrect' or 'exclude', not {invalid_beliefs!r}")
    transcripts = list(transcripts)
    missing = [t.game_id for t in transcripts if t.outcome is None]
    if missing:
        raise IncompleteTranscript(f"no outcome: {', '.join(missing)}")
    return merge_counts(counts_for(t, invalid_beliefs) for t in transcripts)


# ---------------------------------------------------------------------------
# scores


def _ratio(num: float, den: float) -> float | None:
    return num / den if den else None


def role_win_rate(outcomes: Sequence[int], role: Role, undercover_divisor: int = 2) -> float:
    """Credit-based win rate for the social roles; success fraction for the others.

    ``undercover_divisor`` replaces the 2 in the Undercover normalization (3 keeps it within [0, 1]).
    """
    n = len(outcomes)
    if n == 0:
        raise EmptyOutcomeList(role.value)
    if role in CHAMELEON_CREDITS:
        return sum(CHAMELEON_CREDITS[role][o] for o in outcomes) / (2 * n)
    if role in UNDERCOVER_CREDITS:
        return sum(UNDERCOVER_CREDITS[role][o] for o in outcomes) / (undercover_divisor * n)
    return sum(outcomes) / n


def overall_win_rate(per_role: Mapping[Role, float]) -> float:
    missing = [r.value for r in ROLE_ORDER if per_role.get(r) is None]
    if missing:
        raise MissingRole(", ".join(missing))
    return math.fsum(per_role[r] for r in ROLE_ORDER) / len(ROLE_ORDER)


def radar_area(values: Sequence[float]) -> float:
    """Shoelace area of the polygon with ``values`` as radii at equal angles."""
    n = len(values)
    if n < 3:
        return 0.0
    pts = [(r * math.cos(2 * math.pi * k / n), r * math.sin(2 * math.pi * k / n)) for k, r in enumerate(values)]
    s = math.fsum(pts[k][0] * pts[(k + 1) % n][1] - pts[(k + 1) % n][0] * pts[k][1] for k in range(n))
    return abs(s) / 2


@dataclass(frozen=True)
class CapabilityScores:
    win_rate: float
    judgement: float
    reasoning: float
    deception: float
    self_awareness: float
    cooperation: float
    coordination: float
    rationality: float
    role_win_rates: dict[str, float | None] = field(default_factory=dict)
    insufficient: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()

    def axes(self) -> tuple[float, ...]:
        return tuple(getattr(self, a) for a in RADAR_AXES)

    @property
    def radar_area(self) -> float:
        return radar_area(self.axes())

    def to_json(self) -> dict[str, Any]:
        return {
            "win_rate": self.win_rate,
            **{a: getattr(self, a) for a in RADAR_AXES},
            "role_win_rates": dict(self.role_win_rates),
            "insufficient": list(self.insufficient),
            "flags": list(self.flags),
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> CapabilityScores:
        return cls(
            win_rate=data["win_rate"],
            **{a: data[a] for a in RADAR_AXES},
            role_win_rates=dict(data["role_win_rates"]),
            insufficient=tuple(data["insufficient"]),
            flags=tuple(data["flags"]),
        )


def check_ranges(s: CapabilityScores, lam: float = LAMBDA) -> None:
    bounds = {
        "judgement": 1.0,
        "reasoning": 1.0,
        "self_awareness": 1.0,
        "cooperation": 1.0,
        "coordination": 1.0,
        "deception": 1.0 + lam,
        "rationality": 2.0,
    }
    for name, hi in bounds.items():
        v = getattr(s, name)
        if not 0.0 <= v <= hi + 1e-12:
            raise MetricsError(f"{name}={v} outside [0, {hi}]")


def compute_scores(
    counts: MetricCounts,
    T_pd: int = T_PD,
    T_pg: int = T_PG,
    lam: float = LAMBDA,
    undercover_divisor: int = 2,
) -> CapabilityScores:
    """Apply the seven score formulas; zero-denominator terms count as 0 and are listed as insufficient."""
    k = counts
    insufficient: list[str] = []

    def term(num: float, den: float) -> tuple[float, bool]:
        r = _ratio(num, den)
        return (0.0, False) if r is None else (r, True)

    def axis(name: str, *terms: tuple[float, bool], weights: Sequence[float] = ()) -> float:
        if not any(ok for _, ok in terms):
            insufficient.append(name)
        ws = weights or [1.0] * len(terms)
        return math.fsum(w * v for w, (v, _) in zip(ws, terms))

    judgement = axis("judgement", term(k.n_cv, k.n_v))
    reasoning = axis("reasoning", term(k.n_c_gold + k.n_c_inter, k.n_gold + k.n_inter))
    deception = axis("deception", term(k.n_wuc, k.n_uc), term(k.n_wcg, k.n_cg), weights=(1.0, lam))
    self_awareness = axis("self_awareness", term(k.n_cr, k.n_rt))
    cooperation = axis("cooperation", term(k.n_wcs, k.n_cs))
    coordination = axis("coordination", term(k.n_pcs, k.n_wcs))
    rationality = axis("rationality", term(k.n_b, k.n_pd * T_pd), term(k.n_li, k.n_pg * T_pg))

    per_role: dict[str, float | None] = {}
    flags: list[str] = []
    for role in ROLE_ORDER:
        try:
            w = role_win_rate(k.outcomes(role), role, undercover_divisor)
        except EmptyOutcomeList:
            w = None
            insufficient.append(f"win_rate_{role.value}")
        else:
            if w > 1:
                flags.append(f"win_rate_{role.value} exceeds 1 ({w:.4f})")
        per_role[role.value] = w
    present = [w for w in per_role.values() if w is not None]
    if len(present) == len(ROLE_ORDER):
        win_rate = overall_win_rate({r: per_role[r.value] for r in ROLE_ORDER})  # type: ignore[misc]
    elif present:
        win_rate = math.fsum(present) / len(present)
        flags.append(f"win_rate averaged over {len(present)} of {len(ROLE_ORDER)} roles")
    else:
        win_rate = 0.0
        insufficient.append("win_rate")

    scores = CapabilityScores(
        win_rate=win_rate,
        judgement=judgement,
        reasoning=reasoning,
        deception=deception,
        self_awareness=self_awareness,
        cooperation=cooperation,
        coordination=coordination,
        rationality=rationality,
        role_win_rates=per_role,
        insufficient=tuple(insufficient),
        flags=tuple(flags),
    )
    check_ranges(scores, lam)
    return scores


# ---------------------------------------------------------------------------
# report files


def build_report(counts: MetricCounts, scores: CapabilityScores, challenger: str = "") -> dict[str, Any]:
    percent = {
        role: None if w is None else round(100 * w, 10) for role, w in scores.role_win_rates.items()
    }
    return {
        "schema": REPORT_SCHEMA,
        "challenger": challenger,
        "counts": counts.to_json(),
        "scores": scores.to_json(),
        "percent": {
            "win_rate": round(100 * scores.win_rate, 10),
            **{a: round(100 * getattr(scores, a), 10) for a in RADAR_AXES},
            "role_win_rates": percent,
        },
        "radar_area": scores.radar_area,
    }


def radar_csv(scores: CapabilityScores) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["axis", "value", "insufficient_data"])
    for a in RADAR_AXES:
        w.writerow([a, repr(getattr(scores, a)), "yes" if a in scores.insufficient else "no"])
    w.writerow(["radar_area", repr(scores.radar_area), ""])
    return buf.getvalue()
