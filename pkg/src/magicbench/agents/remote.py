"""Model-backed agents: the plain chat agent and the PGM-aware variant."""

from __future__ import annotations

from typing import Sequence

from ..core import MODERATOR, GameEvent, Scenario, Stage, player_name
from ..gateway import ChatGateway, ChatRequest
from .actions import InvalidAction, ParseContext, RoleClaim, parse_action
from .base import Agent, Directive
from .beliefs import Beliefs, belief_map, parse_analysis
from .templates import TemplateSet


def render_view(view: Sequence[GameEvent], viewer: int) -> str:
    lines = []
    for e in view:
        if e.actor == MODERATOR:
            lines.append(f"Moderator: {e.raw_text}")
        elif e.stage is Stage.PGM_ANALYSIS:
            lines.append(f"{player_name(e.actor)} (your private analysis): {e.raw_text}")
        elif e.visibility.kind == "private" and e.actor == viewer:
            lines.append(f"{player_name(e.actor)} (private): {e.raw_text}")
        else:
            lines.append(f"{player_name(e.actor)}: {e.raw_text}")
    return "\n".join(lines)


class RemoteAgent(Agent):
    """Chat model answering each directive from the game context alone."""

    def __init__(
        self,
        player: int,
        model: str,
        gateway: ChatGateway,
        templates: TemplateSet | None = None,
        temperature: float = 0.0,
        max_tokens: int = 512,
    ):
        super().__init__(player, model)
        self.model = model
        self.gateway = gateway
        self.templates = templates or TemplateSet.load()
        self.temperature = temperature
        self.max_tokens = max_tokens

    def _system(self, d: Directive) -> str:
        return self.templates.render(f"{d.scenario.value}/global", d.template_values)

    def _ask(self, d: Directive, user: str) -> str:
        request = ChatRequest(
            model=self.model,
            messages=(("system", self._system(d)), ("user", user)),
            temperature=self.temperature,
            max_tokens=self.max_tokens,
        )
        return self.gateway.chat(request)

    def _context(self, view: Sequence[GameEvent], d: Directive) -> str:
        return f"You are {player_name(self.player)}.\nGame so far:\n{render_view(view, self.player)}"

    def _directive_text(self, d: Directive) -> str:
        return d.prompt if not d.retry_note else f"{d.prompt}\n{d.retry_note}"

    def act(self, view: Sequence[GameEvent], directive: Directive) -> str:
        return self._ask(directive, f"{self._context(view, directive)}\n\n{self._directive_text(directive)}")


class PgmAgent(RemoteAgent):
    """Builds two-hop beliefs before every decision and conditions the decision on them."""

    uses_pgm = True

    def construct_beliefs(self, view: Sequence[GameEvent], d: Directive) -> Beliefs:
        context = self._context(view, d)
        others = [player_name(p) for p in d.others]
        values = {**{f"other_player_{i}": name for i, name in enumerate(others, 1)}, **d.template_values}
        self_claim = None
        parts = []
        if d.scenario is Scenario.UNDERCOVER:
            probe = self.templates.render("undercover/is_undercover", values)
            answer = self._ask(d, f"{context}\n\n{probe}")
            try:
                claim = parse_action(answer, Stage.ROLE_PROBE, ParseContext(self.player, d.players))
                assert isinstance(claim, RoleClaim)
                self_claim = claim.is_special
            except InvalidAction:
                self_claim = None
            parts.append(answer.strip())
            key = "undercover/believes_undercover/pgm" if self_claim else "undercover/believes_civilian/pgm"
        elif d.scenario is Scenario.CHAMELEON:
            role = "chameleon" if d.facts.get("secret_word") is None else "non_chameleon"
            key = f"chameleon/{role}/pgm"
        else:
            key = f"{d.scenario.value}/pgm"
        prompt = self.templates.render(key, values, others)
        analysis = self._ask(d, f"{context}\n\n{prompt}")
        parts.append(analysis.strip())
        beliefs = parse_analysis(analysis, self.player, d.players, self_claim)
        return Beliefs(self.player, "\n\n".join(parts), beliefs.perspectives, self_claim)

    def decision_prompt(self, beliefs: Beliefs, d: Directive) -> str | None:
        values = dict(d.template_values)
        others = d.others
        if d.scenario is Scenario.CHAMELEON:
            if d.stage is not Stage.CLUE:
                return None
            mine = belief_map(beliefs.entries, self.player, d.players)
            if d.facts.get("secret_word") is None:
                suspecting = [p for p in others if belief_map(beliefs.entries, p, d.players).get(self.player)]
                values["target_player"] = player_name(suspecting[0] if suspecting else others[0])
                return self.templates.render("chameleon/chameleon/decision", values)
            suspects = [p for p in others if mine.get(p)]
            values["target_player"] = player_name(suspects[0] if suspects else others[0])
            return self.templates.render("chameleon/non_chameleon/decision", values)
        if d.scenario is Scenario.UNDERCOVER:
            if d.stage is not Stage.CLUE:
                return None
            mine = belief_map(beliefs.entries, self.player, d.players)
            if beliefs.self_claim or mine.get(self.player):
                suspecting = [p for p in others if belief_map(beliefs.entries, p, d.players).get(self.player)]
                values["target_player"] = player_name(suspecting[0] if suspecting else others[0])
                return self.templates.render("undercover/undercover/decision", values)
            suspects = [p for p in others if mine.get(p)]
            if suspects:
                values["target_player"] = player_name(suspects[0])
                return self.templates.render("undercover/civilian/decision", values)
            return self.templates.render("undercover/not_sure/decision", values)
        return self.templates.render(f"{d.scenario.value}/decision", values)

    def decide(self, view: Sequence[GameEvent], beliefs: Beliefs, d: Directive) -> str:
        parts = [self._context(view, d), f"Your analysis:\n{beliefs.text or '(empty)'}"]
        if beliefs.entries:
            parts.append(f"Parsed beliefs:\n{beliefs.summary()}")
        guidance = self.decision_prompt(beliefs, d)
        if guidance:
            parts.append(guidance)
        parts.append(self._directive_text(d))
        return self._ask(d, "\n\n".join(parts))

    def act(self, view: Sequence[GameEvent], directive: Directive) -> str:
        return self.decide(view, self.construct_beliefs(view, directive), directive)
