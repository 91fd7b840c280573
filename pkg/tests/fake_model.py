"""A deterministic stand-in for a chat model, served through httpx.MockTransport.

It recognises every directive the engine and the PGM agent send and answers in
the expected format. Replies depend only on the request body, so record/replay
round-trips are exact. Roughly one reply in eleven is deliberately unusable to
exercise the re-prompt path (the retry note changes the hash, so the retry succeeds).
"""

from __future__ import annotations

import hashlib
import json
import re

import httpx

FAKE_ENV = {"MAGIC_API_BASE": "http://fake-model.invalid/v1", "MAGIC_API_KEY": "test-key"}

_ME = re.compile(r"You are Player (\d+)\.")
_WORDS = ("bright", "round", "common", "small", "loud", "sweet", "old", "fast")


def _h(text: str) -> int:
    return int(hashlib.sha256(text.encode()).hexdigest()[:8], 16)


def _others(me: int, n: int = 3) -> list[int]:
    return [p for p in range(1, n + 1) if p != me]


def _analysis(me: int, kind: str, h: int) -> str:
    a, b = _others(me)
    if h % 2:
        a, b = b, a
    if kind == "theory":
        return (
            f"As Player {me},\nI think Player {a} will cooperate, because they did before.\n"
            f"I think Player {b} will defect, because they want more points.\n"
            f"I think Player {a} thinks:\nPlayer {me} will cooperate, because of trust.\nPlayer {b} will defect.\n"
            f"I think Player {b} thinks\nPlayer {me} will defect.\nPlayer {a} will cooperate."
        )
    role = "undercover" if kind == "undercover" else "the chameleon"
    lines = [f"As Player {me},", "I think:"]
    lines.append(f"Player {a} is {role}, because the clue was vague.")
    lines.append(f"Player {b} is not {role}, because the clue fits.")
    if h % 5 == 0:
        lines.append("Player 9 is ..., because nobody knows.")  # a statement about a seat that does not exist
    lines.append("As for other players' thoughts:")
    lines.append(f"I think now Player {a} thinks:")
    lines.append(f"Player {me} is {'suspicious' if h % 3 == 0 else 'not suspicious'}, because of my clue.")
    lines.append(f"Player {b} is {role}, because of their clue.")
    lines.append(f"I think now Player {b} thinks:")
    lines.append(f"Player {a} is {role}, because the clue was odd.")
    return "\n".join(lines)


def reply(messages: list[dict]) -> str:
    user = messages[-1]["content"]
    tail = user.rsplit("\n\n", 1)[-1]
    me_m = _ME.search(user)
    me = int(me_m.group(1)) if me_m else 1
    others = _others(me)
    h = _h(user)
    garble = h % 11 == 0 and "could not be used" not in tail

    # belief prompts
    if "Do you think you are the undercover?" in tail and "Answer" not in tail:
        return "Yes, I might be the undercover." if h % 4 == 0 else "No, my word matches the others."
    if "deduce the secret code" in tail or "more suspicious of being a chameleon" in tail:
        return _analysis(me, "chameleon", h)
    if "more likely to be the undercover" in tail:
        return _analysis(me, "undercover", h)
    if "try to analyze" in tail:
        return _analysis(me, "theory", h)

    if garble:
        return "Let me think about it some more."
    if 'Answer "Yes" or "No"' in tail:
        return "Yes" if h % 4 == 0 else "No"
    if "accusation stage" in tail:
        return f"I vote for Player {others[h % 2]}."
    if "giving clues" in tail:
        return f"It is {_WORDS[h % len(_WORDS)]} and I see it every day."
    if "Guess the secret word" in tail:
        return "My guess is: " + ("United Kingdom" if h % 2 else "Mango")
    m = re.search(r"split the total fee of ([\d.]+)", tail)
    if m:
        fee = float(m.group(1))
        share = round(fee / 3, 2)
        last = round(fee - 2 * share, 2)
        return f"Player 1: {share}, Player 2: {share}, Player 3: {last}"
    if "Vote for the proposal" in tail:
        return "I vote for Player 1's proposal."
    if "defect or cooperate" in tail:
        return "defect" if h % 3 == 0 else "cooperate"
    m = re.search(r"You have ([\d.]+) points left", tail)
    if m:
        left = float(m.group(1))
        return f"I contribute {min(left, (h % 4) * 5):g}"
    return "I am not sure what to say."


def handler(request: httpx.Request) -> httpx.Response:
    body = json.loads(request.content)
    text = reply(body["messages"])
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def transport() -> httpx.MockTransport:
    return httpx.MockTransport(handler)
