"""Moderator loop: runs one competition and records everything in a transcript."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .agents import (
    Action,
    Agent,
    Choice,
    Clue,
    Contribution,
    Directive,
    Guess,
    InvalidAction,
    ParseContext,
    ProposalAction,
    ProposalVote,
    RoleClaim,
    TemplateSet,
    Vote,
    parse_action,
)
from .agents.beliefs import Beliefs
from .core import (
    MODERATOR,
    ChameleonPayload,
    CostSharingPayload,
    MagicError,
    PrisonersDilemmaPayload,
    PublicGoodPayload,
    Scenario,
    Stage,
    TopicSetting,
    Transcript,
    UndercoverPayload,
    Visibility,
    player_name,
    validate_topic_setting,
    view_for,
)
from .games import (
    Move,
    PDScoring,
    PGLedger,
    Proposal,
    ProposalError,
    cs_fairness_check,
    cs_resolve_round,
    pd_payoffs,
    pg_settle,
    tally_votes,
    theory_winners,
)
from .games.social import ChameleonState, UndercoverState
from .games.voting import VoteResult

log = logging.getLogger(__name__)

MAX_REPROMPTS = 3
__all__ = ["Outcome", "AgentFailure", "run_competition", "tally_votes", "VoteResult", "MAX_REPROMPTS"]


class AgentFailure(MagicError):
    def __init__(self, player: int, cause: BaseException):
        super().__init__(f"player {player} failed: {type(cause).__name__}: {cause}")
        self.player = player
        self.cause = cause


@dataclass(frozen=True)
class Outcome:
    """Result of one competition.

    ``code`` is the Chameleon (0..3) or Undercover (0..2) outcome code, 1/0 for
    cost-sharing consensus/failure, and ``None`` for the two scored games.
    """

    scenario: Scenario
    code: int | None
    winners: frozenset[int] = frozenset()
    scores: dict[int, float] = field(default_factory=dict)
    aborted: bool = False
    reason: str = ""
    details: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario.value,
            "code": self.code,
            "winners": sorted(self.winners),
            "scores": {str(k): v for k, v in sorted(self.scores.items())},
            "aborted": self.aborted,
            "reason": self.reason,
            "details": self.details,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> Outcome:
        return cls(
            scenario=Scenario(data["scenario"]),
            code=data["code"],
            winners=frozenset(data["winners"]),
            scores={int(k): v for k, v in data["scores"].items()},
            aborted=data["aborted"],
            reason=data.get("reason", ""),
            details=dict(data.get("details", {})),
        )


def _fmt(x: float) -> str:
    return f"{x:g}"


class _Game:
    def __init__(self, setting: TopicSetting, agents: Mapping[int, Agent], seed: int, templates: TemplateSet):
        self.setting = setting
        self.agents = agents
        self.templates = templates
        self.players = setting.players
        self.game_id = f"{setting.scenario.value}-{setting.id or 'adhoc'}-{seed}"
        self.transcript = Transcript(self.game_id, setting)
        self.turn = 0

    def note(self, text: str, visibility: Visibility | None = None) -> None:
        self.transcript.append(Stage.MODERATOR_NOTE, MODERATOR, visibility or Visibility.public(), text, turn=self.turn)

    def values(self, player: int, extra: Mapping[str, Any]) -> dict[str, Any]:
        others = [p for p in self.players if p != player]
        v: dict[str, Any] = {"player": player_name(player), "player_name": player_name(player)}
        for i, o in enumerate(others, 1):
            v[f"other_player_{i}"] = player_name(o)
            v[f"oth_player{i}"] = player_name(o)
        v["max_turns"] = v["game_round"] = self.setting.rounds
        p = self.setting.payload
        if isinstance(p, PrisonersDilemmaPayload):
            v.update(cooperate=_fmt(p.cooperate), defect=_fmt(p.defect), one_defect=_fmt(p.one_defect), two_defect=_fmt(p.two_defect))
        elif isinstance(p, PublicGoodPayload):
            v["multiplier"] = _fmt(p.multiplier)
        elif isinstance(p, CostSharingPayload):
            v["total_fee"] = _fmt(p.total_fee)
        v.update(extra)
        return v

    def ask(
        self,
        player: int,
        stage: Stage,
        visibility: Visibility,
        facts: Mapping[str, Any],
        default: Action | None,
        extra_values: Mapping[str, Any] | None = None,
        validate: Callable[[Action], None] | None = None,
        round_no: int = 1,
        prompt_key: str | None = None,
    ) -> Action | None:
        agent = self.agents[player]
        scenario = self.setting.scenario
        values = self.values(player, {"round": round_no, **(extra_values or {})})
        prompt = self.templates.render(prompt_key or f"{scenario.value}/stage/{stage.value}", values)
        directive = Directive(scenario, stage, player, self.players, round_no, prompt, dict(facts), values)
        ctx = ParseContext(
            player,
            self.players,
            self.setting.payload.total_fee if isinstance(self.setting.payload, CostSharingPayload) else None,
        )
        self.transcript.append(Stage.MODERATOR_NOTE, MODERATOR, Visibility.moderator(), f"[to {player_name(player)}] {prompt}", turn=self.turn)

        beliefs: Beliefs | None = None
        try:
            if agent.uses_pgm and stage is not Stage.ROLE_PROBE:
                view = view_for(self.transcript, player)
                beliefs = agent.construct_beliefs(view, directive)  # type: ignore[attr-defined]
                self.transcript.append(
                    Stage.PGM_ANALYSIS, player, Visibility.private(player), beliefs.text, beliefs, turn=self.turn
                )
            raw = ""
            for attempt in range(MAX_REPROMPTS + 1):
                view = view_for(self.transcript, player)
                if beliefs is not None:
                    raw = agent.decide(view, beliefs, directive)  # type: ignore[attr-defined]
                else:
                    raw = agent.act(view, directive)
                try:
                    action = parse_action(raw, stage, ctx)
                    if validate is not None:
                        validate(action)
                except InvalidAction as exc:
                    note = f"Your reply could not be used ({exc}). Please answer again in the requested format."
                    self.transcript.append(
                        Stage.MODERATOR_NOTE,
                        MODERATOR,
                        Visibility.moderator(),
                        f"[invalid reply from {player_name(player)}, attempt {attempt + 1}] {raw!r}: {exc}",
                        turn=self.turn,
                    )
                    directive = Directive(
                        scenario, stage, player, self.players, round_no, prompt, dict(facts), values, note
                    )
                    continue
                self.transcript.append(stage, player, visibility, raw.strip(), action, turn=self.turn)
                return action
        except MagicError as exc:
            raise AgentFailure(player, exc) from exc
        except Exception as exc:  # noqa: BLE001 - any agent crash aborts the game
            raise AgentFailure(player, exc) from exc
        self.transcript.append(
            Stage.MODERATOR_NOTE,
            MODERATOR,
            Visibility.moderator(),
            f"[default action for {player_name(player)} after {MAX_REPROMPTS} re-prompts]",
            turn=self.turn,
        )
        self.transcript.append(stage, player, visibility, raw.strip(), default, turn=self.turn)
        return default

    def lowest_other(self, player: int) -> int:
        return min(p for p in self.players if p != player)

    def collect_votes(self, facts_for: Callable[[int], Mapping[str, Any]]) -> dict[int, int]:
        votes: dict[int, int] = {}
        for p in self.players:
            action = self.ask(p, Stage.ACCUSATION, Visibility.private(p), facts_for(p), Vote(self.lowest_other(p)))
            assert isinstance(action, Vote)
            votes[p] = action.target
        result = tally_votes(votes, self.players)
        listing = ", ".join(f"{player_name(v)} voted for {player_name(t)}" for v, t in sorted(votes.items()))
        tally = ", ".join(f"{player_name(t)}: {c}" for t, c in result.tally.items())
        self.note(f"Votes: {listing}. Tally: {tally}.")
        return votes


# ---------------------------------------------------------------------------


def _run_chameleon(g: _Game) -> Outcome:
    p = g.setting.payload
    assert isinstance(p, ChameleonPayload)
    cham = p.chameleon_position
    state = ChameleonState(g.players, cham, p.secret_word)
    knowers = [x for x in g.players if x != cham]
    g.note(f"Now the game starts! The topic is: {p.topic}")
    g.note(f"You are not the chameleon. The secret word is: {p.secret_word}", Visibility.private(*knowers))
    g.note("You are the chameleon!", Visibility.private(cham))

    def facts(pid: int) -> dict[str, Any]:
        return {
            "topic": p.topic,
            "role": "chameleon" if pid == cham else "non_chameleon",
            "secret_word": None if pid == cham else p.secret_word,
            "clues": dict(state.clues),
        }

    g.turn = 1
    for pid in g.players:
        extra = {} if pid == cham else {"code": p.secret_word}
        action = g.ask(pid, Stage.CLUE, Visibility.public(), facts(pid), Clue("(no clue)"), extra)
        assert isinstance(action, Clue)
        state = state.give_clue(pid, action.text)

    g.turn = 2
    votes = g.collect_votes(facts)
    for voter, target in votes.items():
        state = state.cast_vote(voter, target)

    if state.stage.value == "guess":
        g.turn = 3
        g.note(f"The accusation is correct! {player_name(cham)} is the chameleon. {player_name(cham)}, now guess the secret word.")
        action = g.ask(cham, Stage.GUESS, Visibility.public(), facts(cham), Guess(""))
        assert isinstance(action, Guess)
        state = state.make_guess(action.word)

    code = state.outcome()
    messages = {
        0: f"The chameleon guessed wrong. The secret word was {p.secret_word}. The non-chameleons win!",
        1: f"The accusation is wrong. {player_name(cham)} was the chameleon and wins!",
        2: "Even voting: nobody was singled out.",
        3: f"The chameleon guessed the secret word {p.secret_word} and wins!",
    }
    g.note(messages[code])
    details = {"votes": {str(k): v for k, v in sorted(votes.items())}, "guess": state.guess}
    return Outcome(Scenario.CHAMELEON, code, details=details)


def _run_undercover(g: _Game) -> Outcome:
    p = g.setting.payload
    assert isinstance(p, UndercoverPayload)
    uc = p.undercover_position
    state = UndercoverState(g.players, uc, (p.civilian_word, p.undercover_word), g.setting.rounds or 2)
    g.note("Now the game starts! Each player has received a word.")
    for pid in g.players:
        g.note(f"Your word is: {state.word_of(pid)}", Visibility.private(pid))

    def facts(pid: int) -> dict[str, Any]:
        return {"word": state.word_of(pid), "clues": list(state.clues)}

    for rnd in range(1, state.rounds + 1):
        g.turn = rnd
        for pid in g.players:
            action = g.ask(
                pid, Stage.CLUE, Visibility.public(), facts(pid), Clue("(no clue)"),
                {"code": state.word_of(pid)}, round_no=rnd,
            )
            assert isinstance(action, Clue)
            state = state.give_clue(pid, action.text)

    g.turn = state.rounds + 1
    for pid in g.players:
        action = g.ask(
            pid, Stage.ROLE_PROBE, Visibility.private(pid), facts(pid), None,
            {"code": state.word_of(pid)}, round_no=state.rounds, prompt_key="undercover/stage/probe",
        )
        state = state.record_probe(pid, action.is_special if isinstance(action, RoleClaim) else None)

    g.turn = state.rounds + 2
    votes = g.collect_votes(facts)
    for voter, target in votes.items():
        state = state.cast_vote(voter, target)
    code = state.outcome()
    messages = {
        0: f"{player_name(uc)} was the undercover and escaped. The undercover wins!",
        1: f"{player_name(uc)} was the undercover and has been caught. The civilians win!",
        2: "Even voting: nobody was eliminated.",
    }
    g.note(messages[code])
    details = {
        "votes": {str(k): v for k, v in sorted(votes.items())},
        "self_probes": {str(k): v for k, v in sorted(state.self_probes.items())},
    }
    return Outcome(Scenario.UNDERCOVER, code, details=details)


def _run_cost_sharing(g: _Game) -> Outcome:
    p = g.setting.payload
    assert isinstance(p, CostSharingPayload)
    descriptions = dict(zip(g.players, p.usage_descriptions))
    standalone = dict(zip(g.players, p.standalone_costs)) if p.standalone_costs else None
    lines = [f"The total airport fee is {_fmt(p.total_fee)}."]
    lines += [f"{player_name(pid)}: {d}" for pid, d in descriptions.items()]
    if standalone:
        lines.append(
            "Standalone costs (what each airline would pay on its own): "
            + ", ".join(f"{player_name(k)}: {_fmt(v)}" for k, v in standalone.items())
        )
    g.note("\n".join(lines))

    history: list[dict[str, Any]] = []
    last_own: dict[int, dict[int, float]] = {}

    def check(action: Action) -> None:
        assert isinstance(action, ProposalAction)
        proposal = Proposal(0, action.shares)
        try:
            proposal.validate(p.total_fee, g.players)
        except ProposalError as exc:
            raise InvalidAction(str(exc)) from exc
        unfair = cs_fairness_check(proposal, standalone)
        if unfair:
            raise InvalidAction(f"fairness check failed for {', '.join(player_name(x) for x in unfair)}")

    agreed: Proposal | None = None
    rounds_used = 0
    for rnd in range(1, (g.setting.rounds or 5) + 1):
        g.turn = rnd
        rounds_used = rnd
        proposals: dict[int, dict[int, float]] = {}
        for pid in g.players:
            facts = {
                "total_fee": p.total_fee,
                "descriptions": descriptions,
                "standalone_costs": standalone,
                "history": list(history),
                "proposals": dict(proposals),
            }
            fallback = last_own.get(pid) or {x: round(p.total_fee / len(g.players), 2) for x in g.players}
            action = g.ask(pid, Stage.PROPOSAL, Visibility.public(), facts, ProposalAction(fallback), validate=check, round_no=rnd)
            assert isinstance(action, ProposalAction)
            proposals[pid] = dict(action.shares)
            last_own[pid] = dict(action.shares)
        votes: dict[int, int] = {}
        for pid in g.players:
            facts = {
                "total_fee": p.total_fee,
                "descriptions": descriptions,
                "standalone_costs": standalone,
                "history": list(history),
                "proposals": dict(proposals),
            }
            action = g.ask(pid, Stage.VOTE, Visibility.private(pid), facts, ProposalVote(pid), round_no=rnd)
            assert isinstance(action, ProposalVote)
            votes[pid] = action.proposer
        g.note(
            f"Round {rnd} votes: "
            + ", ".join(f"{player_name(v)} voted for {player_name(t)}'s proposal" for v, t in sorted(votes.items()))
        )
        history.append({"proposals": proposals, "votes": votes})
        agreed = cs_resolve_round([Proposal(k, v) for k, v in proposals.items()], votes)
        if agreed is not None:
            break

    if agreed is None:
        g.note(f"No consensus after {rounds_used} rounds. The game fails.")
        return Outcome(Scenario.COST_SHARING, 0, details={"rounds": rounds_used})
    g.note(f"All airlines agreed on {player_name(agreed.proposer)}'s proposal. The game succeeds!")
    return Outcome(
        Scenario.COST_SHARING,
        1,
        winners=frozenset(g.players),
        scores=dict(agreed.shares),
        details={"rounds": rounds_used, "agreed_proposer": agreed.proposer},
    )


def _run_prisoners_dilemma(g: _Game) -> Outcome:
    p = g.setting.payload
    assert isinstance(p, PrisonersDilemmaPayload)
    scoring = PDScoring(p.cooperate, p.defect, p.one_defect, p.two_defect)
    totals = {pid: 0.0 for pid in g.players}
    history: list[dict[int, str]] = []
    g.note("Now the game starts!")
    for rnd in range(1, (g.setting.rounds or 5) + 1):
        g.turn = rnd
        choices: dict[int, Move] = {}
        for pid in g.players:
            facts = {"scoring": scoring, "history": list(history), "totals": dict(totals)}
            action = g.ask(pid, Stage.CHOICE, Visibility.private(pid), facts, Choice(Move.COOPERATE), round_no=rnd)
            assert isinstance(action, Choice)
            choices[pid] = action.move
        payoffs = pd_payoffs(choices, scoring)
        for pid, v in payoffs.items():
            totals[pid] += v
        history.append({pid: m.value for pid, m in choices.items()})
        g.note(
            f"Round {rnd} results: "
            + ", ".join(f"{player_name(k)} chose {m.value} and gets {_fmt(payoffs[k])}" for k, m in choices.items())
            + ". Totals: "
            + ", ".join(f"{player_name(k)}: {_fmt(v)}" for k, v in totals.items())
            + "."
        )
    winners = theory_winners(totals)
    g.note("Winner(s): " + ", ".join(player_name(w) for w in sorted(winners)))
    details = {"choices": [{str(k): v for k, v in h.items()} for h in history]}
    return Outcome(Scenario.PRISONERS_DILEMMA, None, winners, dict(totals), details=details)


def _run_public_good(g: _Game) -> Outcome:
    p = g.setting.payload
    assert isinstance(p, PublicGoodPayload)
    remaining = {pid: float(p.initial_balance) for pid in g.players}
    history: list[dict[int, float]] = []
    g.note(f"Now the game starts! Each player has {_fmt(p.initial_balance)} points.")
    for rnd in range(1, (g.setting.rounds or 5) + 1):
        g.turn = rnd
        contributions: dict[int, float] = {}
        for pid in g.players:
            budget = remaining[pid]

            def check(action: Action, budget: float = budget) -> None:
                assert isinstance(action, Contribution)
                if action.amount > budget + 1e-9:
                    raise InvalidAction(f"you only have {_fmt(budget)} points left")

            facts = {"multiplier": p.multiplier, "remaining": budget, "history": list(history)}
            action = g.ask(
                pid, Stage.CONTRIBUTION, Visibility.private(pid), facts, Contribution(0),
                {"remaining": _fmt(budget)}, validate=check, round_no=rnd,
            )
            assert isinstance(action, Contribution)
            contributions[pid] = action.amount
            remaining[pid] = budget - action.amount
        history.append(contributions)
        g.note(
            f"Round {rnd} contributions: "
            + ", ".join(f"{player_name(k)}: {_fmt(v)}" for k, v in contributions.items())
            + f". Pool so far: {_fmt(math.fsum(sum(h.values()) for h in history))}."
        )
    summed = {pid: math.fsum(h[pid] for h in history) for pid in g.players}
    ledger = pg_settle(summed, PGLedger.start(g.players, p.multiplier, p.initial_balance))
    winners = theory_winners(ledger.balances)
    g.note(
        "Final points: "
        + ", ".join(f"{player_name(k)}: {_fmt(v)}" for k, v in ledger.balances.items())
        + ". Winner(s): "
        + ", ".join(player_name(w) for w in sorted(winners))
    )
    details = {"contributions": [{str(k): v for k, v in h.items()} for h in history]}
    return Outcome(Scenario.PUBLIC_GOOD, None, winners, dict(ledger.balances), details=details)


_RUNNERS = {
    Scenario.CHAMELEON: _run_chameleon,
    Scenario.UNDERCOVER: _run_undercover,
    Scenario.COST_SHARING: _run_cost_sharing,
    Scenario.PRISONERS_DILEMMA: _run_prisoners_dilemma,
    Scenario.PUBLIC_GOOD: _run_public_good,
}


def run_competition(
    setting: TopicSetting,
    agents: Mapping[int, Agent],
    seed: int = 0,
    templates: TemplateSet | None = None,
) -> tuple[Outcome, Transcript]:
    """Play one competition to the end.

    An agent that raises (gateway failure, crash) aborts the game; the returned
    outcome then has ``aborted=True`` and the reason.
    """
    setting = validate_topic_setting(setting)
    if set(agents) != set(setting.players):
        raise MagicError(f"need one agent per player {list(setting.players)}, got {sorted(agents)}")
    g = _Game(setting, agents, seed, templates or TemplateSet.load())
    for agent in agents.values():
        agent.bind(g.game_id)
    try:
        outcome = _RUNNERS[setting.scenario](g)
    except AgentFailure as exc:
        log.error("%s aborted: %s", g.game_id, exc)
        cause = exc.cause
        details: dict[str, Any] = {"player": exc.player, "error": type(cause).__name__}
        if hasattr(cause, "fingerprint"):
            details["fingerprint"] = cause.fingerprint
        g.note(f"Game aborted: {exc}", Visibility.moderator())
        outcome = Outcome(setting.scenario, None, aborted=True, reason=str(exc), details=details)
    g.transcript.close(outcome)
    return outcome, g.transcript
