"""Two-hop belief records and the parser for free-text PGM analyses.

An analysis states what the owner thinks of each other player (first hop) and what
it thinks each other player currently believes (second hop). Statements naming a
player outside the game are kept but marked invalid.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Iterable

from ..core import player_name


@dataclass(frozen=True)
class BeliefEntry:
    perspective: int
    target: int
    label: str
    rationale: str = ""
    valid: bool = True


@dataclass(frozen=True)
class PerspectiveBelief:
    perspective: int
    text: str
    parsed: tuple[BeliefEntry, ...]


@dataclass(frozen=True)
class Beliefs:
    owner: int
    text: str
    perspectives: tuple[PerspectiveBelief, ...]
    self_claim: bool | None = None

    @property
    def first_hop(self) -> tuple[BeliefEntry, ...]:
        return tuple(e for pb in self.perspectives if pb.perspective == self.owner for e in pb.parsed)

    @property
    def second_hop(self) -> tuple[BeliefEntry, ...]:
        return tuple(e for pb in self.perspectives if pb.perspective != self.owner for e in pb.parsed)

    @property
    def entries(self) -> tuple[BeliefEntry, ...]:
        return tuple(e for pb in self.perspectives for e in pb.parsed)

    def to_json(self) -> dict[str, Any]:
        return {
            "owner": self.owner,
            "self_claim": self.self_claim,
            "perspectives": {str(pb.perspective): pb.text for pb in self.perspectives},
            "entries": [
                {"perspective": e.perspective, "target": e.target, "label": e.label, "rationale": e.rationale, "valid": e.valid}
                for e in self.entries
            ],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any], text: str = "") -> Beliefs:
        entries = [
            BeliefEntry(e["perspective"], e["target"], e["label"], e.get("rationale", ""), e["valid"]) for e in data["entries"]
        ]
        if "perspectives" in data:
            texts = {int(k): v for k, v in data["perspectives"].items()}
        else:
            texts = _perspectives_of(data["owner"], entries)
        return build_beliefs(data["owner"], text, entries, texts, data.get("self_claim"))

    def summary(self) -> str:
        """Compact rendering fed back into the decision prompt."""
        lines = []
        for pb in self.perspectives:
            head = "My view" if pb.perspective == self.owner else f"What I think {player_name(pb.perspective)} thinks"
            items = "; ".join(f"{player_name(e.target)} {e.label}" for e in pb.parsed if e.valid)
            lines.append(f"{head}: {items or '(nothing parsed)'}")
        return "\n".join(lines)


_VERBS = r"(?:is|will|would|might|may|seems?|looks?|has|thinks? of)"
_SWITCH = re.compile(r"I\s+think\s+(?:now\s+)?player\s*(\d+)\s+thinks?\b\s*:?", re.I)
_SEGMENT_SPLIT = re.compile(r"(?=\bI\s+think\b)", re.I)
_LEAD = re.compile(r"^\s*(?:\d+[.)]\s*)?(?:[-*•]\s*)?(?:I\s+think\s*:?\s*)?(?:that\s+)?", re.I)
_HEAD_ENTRY = re.compile(rf"player\s*(\d+)\s*(?:[:\-–]\s*)?(?:{_VERBS}\b)?", re.I)
_INNER_ENTRY = re.compile(rf"\bplayer\s*(\d+)\s+{_VERBS}\b", re.I)
_BECAUSE = re.compile(r",?\s*\bbecause\b", re.I)


def _split_label(rest: str) -> tuple[str, str]:
    m = _BECAUSE.search(rest)
    label, rationale = (rest[: m.start()], rest[m.end():]) if m else (rest, "")
    label = label.strip().strip(",.;:").strip()
    return label, rationale.strip()


def _entries_in(segment: str, perspective: int, players: tuple[int, ...]) -> list[BeliefEntry]:
    body = _LEAD.sub("", segment, count=1)
    starts: list[tuple[int, int, int]] = []  # (start, end, target)
    head = _HEAD_ENTRY.match(body)
    if head:
        starts.append((head.start(), head.end(), int(head.group(1))))
    because = _BECAUSE.search(body)
    limit = because.start() if because else len(body)
    for m in _INNER_ENTRY.finditer(body):
        if (head and m.start() < head.end()) or m.start() >= limit:
            continue
        starts.append((m.start(), m.end(), int(m.group(1))))
    entries = []
    for i, (_, end, target) in enumerate(starts):
        stop = starts[i + 1][0] if i + 1 < len(starts) else len(body)
        label, rationale = _split_label(body[end:stop])
        label = label.rstrip(". ").strip()
        valid = target in players and bool(label) and label not in ("...", "xx")
        entries.append(BeliefEntry(perspective, target, label, rationale, valid))
    return entries


def parse_analysis(text: str, owner: int, players: Iterable[int], self_claim: bool | None = None) -> Beliefs:
    players = tuple(players)
    perspective = owner
    entries: list[BeliefEntry] = []
    texts: dict[int, list[str]] = {p: [] for p in players}
    for line in text.splitlines():
        for segment in _SEGMENT_SPLIT.split(line):
            if not segment.strip():
                continue
            m = _SWITCH.search(segment)
            if m:
                target = int(m.group(1))
                perspective = target if target in players and target != owner else owner
                if target not in players:
                    entries.append(BeliefEntry(owner, target, "", "", False))
                segment = segment[m.end():]
            if perspective in texts:
                texts[perspective].append(segment.strip())
            if segment.strip():
                entries.extend(_entries_in(segment, perspective, players))
    by_perspective = {p: "\n".join(t for t in texts[p] if t) for p in players}
    return build_beliefs(owner, text, entries, by_perspective, self_claim)


def _perspectives_of(owner: int, entries: Iterable[BeliefEntry]) -> dict[int, str]:
    seen = {owner: ""}
    for e in entries:
        seen.setdefault(e.perspective, "")
    return seen


def build_beliefs(
    owner: int,
    text: str,
    entries: Iterable[BeliefEntry],
    perspective_texts: dict[int, str],
    self_claim: bool | None = None,
) -> Beliefs:
    entries = list(entries)
    order = [owner] + sorted(p for p in perspective_texts if p != owner)
    perspectives = tuple(
        PerspectiveBelief(p, perspective_texts.get(p, ""), tuple(e for e in entries if e.perspective == p))
        for p in order
    )
    return Beliefs(owner, text, perspectives, self_claim)


# polarity of a label in a single-hidden-role game: True = "is the hidden one"
_NEGATIVE = re.compile(
    r"\b(?:not|less|least|non-?chameleons?|non-?undercover|civilians?|innocent|unlikely|trustworthy|safe|no)\b|n't",
    re.I,
)
_POSITIVE = re.compile(r"\b(?:chameleon|undercover|suspicious|suspect|more|most|likely|lying|spy|imposter|impostor)\b", re.I)


def label_polarity(label: str) -> bool | None:
    if _NEGATIVE.search(label):
        return False
    if _POSITIVE.search(label):
        return True
    return None


def belief_map(entries: Iterable[BeliefEntry], perspective: int, players: Iterable[int]) -> dict[int, bool]:
    """What ``perspective`` believes about each target: True means "is the hidden player".

    With one hidden role, naming one player as hidden implies the rest are not.
    """
    explicit: dict[int, bool] = {}
    for e in entries:
        if e.perspective != perspective or not e.valid:
            continue
        pol = label_polarity(e.label)
        if pol is not None and e.target not in explicit:
            explicit[e.target] = pol
    positives = [t for t, v in explicit.items() if v]
    if len(positives) == 1:
        for p in players:
            explicit.setdefault(p, False)
    return explicit
