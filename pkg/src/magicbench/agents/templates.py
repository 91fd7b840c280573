from __future__ import annotations

import json
import re
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

_PLACEHOLDER = re.compile(r"\{(\w+)\}")


class TemplateSet:
    """Prompt templates keyed like ``"chameleon/non_chameleon/pgm"``.

    Files are UTF-8 text with ``{name}`` placeholders; ``manifest.json`` maps keys to files.
    """

    def __init__(self, templates: Mapping[str, str]):
        self._templates = dict(templates)

    @classmethod
    def load(cls, directory: str | Path | None = None) -> TemplateSet:
        if directory is None:
            root = resources.files("magicbench") / "data" / "templates"
        else:
            root = Path(directory)
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
        return cls({key: (root / name).read_text(encoding="utf-8").strip() for key, name in manifest["templates"].items()})

    def __contains__(self, key: str) -> bool:
        return key in self._templates

    def keys(self) -> list[str]:
        return sorted(self._templates)

    def raw(self, key: str) -> str:
        return self._templates[key]

    def render(self, key: str, values: Mapping[str, Any], others: Sequence[str] = ()) -> str:
        return render_template(self._templates[key], values, others)


def render_template(text: str, values: Mapping[str, Any], others: Sequence[str] = ()) -> str:
    """Substitute known placeholders, leaving unknown ones untouched.

    A line mentioning ``{other_player}`` is repeated once per name in ``others``;
    ``{idx}`` numbers lines in order of appearance.
    """
    lines: list[str] = []
    for line in text.splitlines():
        if "{other_player}" in line and others:
            lines.extend(line.replace("{other_player}", name) for name in others)
        else:
            lines.append(line)
    counter = 0
    out = []
    for line in lines:
        if "{idx}" in line:
            counter += 1
            line = line.replace("{idx}", str(counter))
        out.append(_PLACEHOLDER.sub(lambda m: str(values[m.group(1)]) if m.group(1) in values else m.group(0), line))
    return "\n".join(out)
