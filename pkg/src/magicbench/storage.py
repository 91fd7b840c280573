"""JSONL transcript files and their outcome sidecars.

Each game is stored as ``<scenario>/<setting_id>/<seed>.jsonl`` (one event per
line) next to ``<seed>.meta.json`` holding the setting and outcome. Timestamps
are logical (a fixed epoch plus one second per event) so reruns are byte-identical.
"""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any

from .agents import action_from_json, action_to_json
from .agents.beliefs import Beliefs
from .core import MODERATOR, GameEvent, MagicError, Stage, TopicSetting, Transcript, Visibility
from .engine import Outcome

TRANSCRIPT_SCHEMA = "magic-transcript/1"
EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)


class IncompleteTranscript(MagicError):
    def __init__(self, paths: list[str], why: str = "missing outcome or events"):
        super().__init__(f"{why}: {', '.join(paths)}")
        self.paths = paths


def _timestamp(seq: int) -> str:
    return (EPOCH + timedelta(seconds=seq)).isoformat().replace("+00:00", "Z")


def _parsed_to_json(value: Any) -> Any:
    if value is None:
        return None
    if isinstance(value, Beliefs):
        return {"type": "beliefs", **value.to_json()}
    return action_to_json(value)


def _parsed_from_json(value: Any, raw_text: str) -> Any:
    if value is None:
        return None
    if value.get("type") == "beliefs":
        return Beliefs.from_json(value, raw_text)
    return action_from_json(value)


def event_to_json(e: GameEvent) -> dict[str, Any]:
    return {
        "game_id": e.game_id,
        "turn": e.turn,
        "seq": e.seq,
        "stage": e.stage.value,
        "actor": "moderator" if e.actor == MODERATOR else e.actor,
        "visibility": e.visibility.to_json(),
        "raw_text": e.raw_text,
        "parsed_action": _parsed_to_json(e.parsed_action),
        "timestamp": _timestamp(e.seq),
    }


def event_from_json(d: dict[str, Any]) -> GameEvent:
    return GameEvent(
        game_id=d["game_id"],
        turn=d["turn"],
        seq=d["seq"],
        stage=Stage(d["stage"]),
        actor=MODERATOR if d["actor"] == "moderator" else int(d["actor"]),
        visibility=Visibility.from_json(d["visibility"]),
        raw_text=d["raw_text"],
        parsed_action=_parsed_from_json(d["parsed_action"], d["raw_text"]),
    )


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def transcript_path(root: str | Path, setting: TopicSetting, seed: int) -> Path:
    return Path(root) / setting.scenario.value / (setting.id or "adhoc") / f"{seed}.jsonl"


def write_transcript(
    root: str | Path,
    transcript: Transcript,
    seed: int,
    agents: dict[int, str] | None = None,
) -> list[Path]:
    """Write the event log and sidecar; returns both paths."""
    if transcript.outcome is None:
        raise IncompleteTranscript([transcript.game_id], "transcript not closed")
    path = transcript_path(root, transcript.setting, seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(_dumps(event_to_json(e)) + "\n" for e in transcript.events), encoding="utf-8")
    meta = {
        "schema": TRANSCRIPT_SCHEMA,
        "game_id": transcript.game_id,
        "seed": seed,
        "setting": transcript.setting.to_dict(),
        "agents": {str(k): v for k, v in sorted((agents or {}).items())},
        "outcome": transcript.outcome.to_json(),
    }
    meta_path = path.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(meta, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return [path, meta_path]


def read_transcript(path: str | Path) -> Transcript:
    path = Path(path)
    meta_path = path.with_suffix(".meta.json")
    if not meta_path.exists():
        raise IncompleteTranscript([str(path)], "no outcome sidecar")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if meta.get("schema") != TRANSCRIPT_SCHEMA:
        raise IncompleteTranscript([str(path)], f"unknown schema {meta.get('schema')!r}")
    transcript = Transcript(meta["game_id"], TopicSetting.from_dict(meta["setting"]))
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                transcript.events.append(event_from_json(json.loads(line)))
    transcript.close(Outcome.from_json(meta["outcome"]))
    return transcript


def find_transcripts(root: str | Path) -> list[Path]:
    return sorted(Path(root).rglob("*.jsonl"))


def load_transcripts(root: str | Path) -> list[Transcript]:
    """Every transcript under ``root``; all-or-nothing on missing sidecars."""
    paths = find_transcripts(root)
    if not paths:
        raise IncompleteTranscript([str(root)], "no transcripts found")
    bad = [str(p) for p in paths if not p.with_suffix(".meta.json").exists()]
    if bad:
        raise IncompleteTranscript(bad, "no outcome sidecar")
    return [read_transcript(p) for p in paths]
