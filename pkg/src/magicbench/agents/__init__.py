from __future__ import annotations

from urllib.parse import parse_qsl

from ..gateway import ChatGateway
from .actions import (
    Action,
    Ambiguous,
    Choice,
    Clue,
    Contribution,
    Guess,
    InvalidAction,
    NegativeAmount,
    NoMatch,
    ParseContext,
    ProposalAction,
    ProposalVote,
    RoleClaim,
    SelfVoteAction,
    Vote,
    action_from_json,
    action_to_json,
    parse_action,
    render_action,
)
from .base import Agent, Directive
from .beliefs import BeliefEntry, Beliefs, PerspectiveBelief, belief_map, label_polarity, parse_analysis
from .remote import PgmAgent, RemoteAgent
from .scripted import ScriptedAgent
from .templates import TemplateSet


def _coerce(value: str) -> object:
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def make_agent(
    spec: str,
    player: int,
    seed: int = 0,
    pgm: bool = False,
    gateway: ChatGateway | None = None,
    templates: TemplateSet | None = None,
) -> Agent:
    """Build an agent from a spec string.

    ``scripted`` / ``scripted:<strategy>?key=value`` give rule-based agents; anything
    else is taken as a model id served through ``gateway``.
    """
    if spec == "scripted" or spec.startswith("scripted:"):
        if pgm:
            raise ValueError("scripted agents have no PGM variant")
        body = spec.partition(":")[2] or "baseline"
        name, _, query = body.partition("?")
        params = {k: _coerce(v) for k, v in parse_qsl(query)}
        return ScriptedAgent(player, name, seed=seed, **params)
    if gateway is None:
        raise ValueError(f"model agent {spec!r} needs a gateway")
    cls = PgmAgent if pgm else RemoteAgent
    return cls(player, spec, gateway, templates)
