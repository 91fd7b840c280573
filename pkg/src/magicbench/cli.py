"""Command-line entry point: ``magicbench tournament | report | run``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .agents import TemplateSet, make_agent
from .core import MagicError, Scenario, SettingError, load_topic_fixture
from .engine import run_competition
from .gateway import Mode
from .storage import IncompleteTranscript, write_transcript
from .tournament import (
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    TournamentConfig,
    abort_exit_code,
    build_gateway,
    default_topic_path,
    report_from_transcripts,
    run_tournament,
)

log = logging.getLogger("magicbench")


def _scenarios(text: str) -> tuple[Scenario, ...]:
    try:
        return tuple(Scenario(s.strip()) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{exc}; choose from {', '.join(s.value for s in Scenario)}") from exc


def _seeds(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s.strip())


def _agent_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--challenger", default="scripted", help="model id, or scripted[:strategy?k=v] (default: scripted)")
    p.add_argument("--pgm", action="store_true", help="give the challenger the two-hop belief step")
    p.add_argument("--opponent", default="scripted", help="agent for every other seat (default: scripted)")
    p.add_argument("--mode", type=Mode, choices=list(Mode), default=Mode.REPLAY, metavar="{live,record,replay}", help="gateway mode (default: replay)")
    p.add_argument("--fixtures", type=Path, default=Path("fixtures"), help="recorded model responses (default: ./fixtures)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magicbench", description="Multi-agent game benchmark runner.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tournament", help="run every topic setting and write transcripts plus a report")
    _agent_flags(t)
    t.add_argument("--scenarios", type=_scenarios, default=tuple(Scenario), help="comma-separated subset")
    t.add_argument("--topics", type=Path, nargs="*", default=(), help="topic fixture files (default: bundled)")
    t.add_argument("--seed", type=_seeds, default=(0,), help="seed or comma-separated seeds (default: 0)")
    t.add_argument("--jobs", type=int, default=1)
    t.add_argument("--out", type=Path, default=Path("magic-out"))

    r = sub.add_parser("report", help="recompute scores from a transcript directory")
    r.add_argument("transcripts", type=Path)
    r.add_argument("--out", type=Path, default=None, help="where to write report.json/radar.csv (default: the directory itself)")

    g = sub.add_parser("run", help="play a single competition and print its outcome")
    _agent_flags(g)
    g.add_argument("--scenario", type=Scenario, required=True, choices=list(Scenario), metavar="{" + ",".join(s.value for s in Scenario) + "}")
    g.add_argument("--setting", default=None, help="setting id (default: the first in the fixture)")
    g.add_argument("--topics", type=Path, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, default=None, help="also write the transcript here")
    return parser


def cmd_tournament(args: argparse.Namespace) -> int:
    try:
        config = TournamentConfig(
            challenger=args.challenger,
            pgm=args.pgm,
            opponent=args.opponent,
            scenarios=args.scenarios,
            topics=tuple(args.topics),
            seeds=args.seed,
            jobs=args.jobs,
            out=args.out,
            mode=args.mode,
            fixtures=args.fixtures,
        )
        result = run_tournament(config)
    except (ConfigError, SettingError, ValueError) as exc:
        print(json.dumps({"exit_code": EXIT_CONFIG, "error": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    summary = {
        "exit_code": result.exit_code,
        "games": len(result.games),
        "aborted": len(result.failures),
        "win_rate": result.scores.win_rate,
        "radar_area": result.scores.radar_area,
        "out": str(config.out),
    }
    if result.failures:
        summary["failures"] = result.failures
    print(json.dumps(summary, sort_keys=True, indent=2))
    return result.exit_code


def cmd_report(args: argparse.Namespace) -> int:
    try:
        _, scores, paths = report_from_transcripts(args.transcripts, args.out)
    except IncompleteTranscript as exc:
        print(json.dumps({"exit_code": EXIT_CONFIG, "error": str(exc), "files": exc.paths}), file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({"report": [str(p) for p in paths], "scores": scores.to_json()}, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    try:
        settings = load_topic_fixture(args.topics or default_topic_path(args.scenario))
        if args.setting:
            settings = [s for s in settings if s.id == args.setting]
            if not settings:
                raise ConfigError(f"no setting {args.setting!r} in the {args.scenario.value} fixture")
        setting = settings[0]
        templates = TemplateSet.load()
        needs = [s for s in (args.challenger, args.opponent) if not s.startswith("scripted")]
        gateway = build_gateway(
            TournamentConfig(mode=args.mode, fixtures=args.fixtures, scenarios=(args.scenario,))
        ) if needs else None
        agents = {
            p: make_agent(
                args.challenger if p == setting.challenger_position else args.opponent,
                p,
                args.seed,
                args.pgm and p == setting.challenger_position,
                gateway,
                templates,
            )
            for p in setting.players
        }
    except (MagicError, ValueError) as exc:
        print(json.dumps({"exit_code": EXIT_CONFIG, "error": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    outcome, transcript = run_competition(setting, agents, args.seed, templates)
    if args.out:
        labels = {p: a.label for p, a in agents.items()}
        write_transcript(args.out, transcript, args.seed, labels)
    print(json.dumps(outcome.to_json(), sort_keys=True, indent=2))
    if outcome.aborted:
        return abort_exit_code(outcome.details)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"tournament": cmd_tournament, "report": cmd_report, "run": cmd_run}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
