"""Tournament runner and report regeneration behind the CLI."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path
from typing import Any, Iterable

from .agents import TemplateSet, make_agent
from .core import MagicError, Scenario, TopicSetting, load_topic_fixture
from .engine import Outcome, run_competition
from .gateway import ChatGateway, FixtureStore, GatewayError, Mode, RateLimiter
from .metrics import CapabilityScores, MetricCounts, build_report, compute_scores, counts_for, merge_counts, radar_csv
from .storage import find_transcripts, load_transcripts, write_transcript

log = logging.getLogger(__name__)

MANIFEST_SCHEMA = "magic-manifest/1"
EXIT_OK, EXIT_CONFIG, EXIT_ABORTS, EXIT_GATEWAY = 0, 2, 3, 4
ALL_SCENARIOS = tuple(Scenario)


class ConfigError(MagicError):
    pass


def default_topic_path(scenario: Scenario) -> Path:
    return Path(str(files("magicbench") / "data" / "topics" / f"{scenario.value}.json"))


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class TournamentConfig:
    challenger: str = "scripted"
    pgm: bool = False
    opponent: str = "scripted"
    scenarios: tuple[Scenario, ...] = ALL_SCENARIOS
    topics: tuple[Path, ...] = ()  # empty: packaged fixtures
    seeds: tuple[int, ...] = (0,)
    jobs: int = 1
    out: Path = Path("magic-out")
    mode: Mode = Mode.REPLAY
    fixtures: Path = Path("fixtures")
    max_in_flight: int = 4
    requests_per_minute: float | None = None

    def __post_init__(self) -> None:
        self.scenarios = tuple(Scenario(s) for s in self.scenarios)
        self.topics = tuple(Path(p) for p in self.topics)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.out = Path(self.out)
        self.fixtures = Path(self.fixtures)
        self.mode = Mode(self.mode)
        if self.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {self.jobs}")
        if not self.scenarios:
            raise ConfigError("at least one scenario is required")
        if not self.seeds:
            raise ConfigError("at least one seed is required")

    @property
    def challenger_label(self) -> str:
        return f"{self.challenger}+pgm" if self.pgm else self.challenger

    def snapshot(self) -> dict[str, Any]:
        return {
            "challenger": self.challenger,
            "pgm": self.pgm,
            "opponent": self.opponent,
            "scenarios": [s.value for s in self.scenarios],
            "seeds": list(self.seeds),
            "jobs": self.jobs,
            "mode": self.mode.value,
        }

    def topic_files(self) -> dict[Scenario, Path]:
        if not self.topics:
            return {s: default_topic_path(s) for s in self.scenarios}
        found: dict[Scenario, Path] = {}
        for path in self.topics:
            try:
                scenario = Scenario(json.loads(path.read_text(encoding="utf-8"))["scenario"])
            except (OSError, ValueError, KeyError) as exc:
                raise ConfigError(f"cannot read topic fixture {path}: {exc}") from exc
            if scenario in self.scenarios:
                found[scenario] = path
        missing = [s.value for s in self.scenarios if s not in found]
        if missing:
            raise ConfigError(f"no topic fixture given for {', '.join(missing)}")
        return found


@dataclass
class GameRecord:
    setting: TopicSetting
    seed: int
    outcome: Outcome
    paths: list[Path]
    counts: MetricCounts


@dataclass
class TournamentResult:
    exit_code: int
    games: list[GameRecord]
    counts: MetricCounts
    scores: CapabilityScores
    failures: list[dict[str, Any]] = field(default_factory=list)
    artifacts: list[Path] = field(default_factory=list)


def _needs_gateway(spec: str) -> bool:
    return not (spec == "scripted" or spec.startswith("scripted:"))


def build_gateway(config: TournamentConfig) -> ChatGateway:
    return ChatGateway(
        mode=config.mode,
        store=FixtureStore(config.fixtures),
        limiter=RateLimiter(config.max_in_flight, config.requests_per_minute),
    )


def _write_json(path: Path, doc: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def write_report(out: Path, counts: MetricCounts, scores: CapabilityScores, label: str) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    report = _write_json(out / "report.json", build_report(counts, scores, label))
    radar = out / "radar.csv"
    radar.write_text(radar_csv(scores), encoding="utf-8")
    return [report, radar]


def _write_manifest(out: Path, config: TournamentConfig | None, topics: dict[Scenario, Path], games: list[dict[str, Any]], artifacts: Iterable[Path]) -> Path:
    doc = {
        "schema": MANIFEST_SCHEMA,
        "config": config.snapshot() if config else None,
        "fixtures": {s.value: {"file": p.name, "sha256": sha256_file(p)} for s, p in sorted(topics.items())},
        "games": games,
        "artifacts": {str(p.relative_to(out)): sha256_file(p) for p in sorted(artifacts)},
    }
    return _write_json(out / "manifest.json", doc)


def run_tournament(config: TournamentConfig, gateway: ChatGateway | None = None) -> TournamentResult:
    """Play every (setting, seed) pair and write transcripts, report and manifest under ``config.out``."""
    topics = config.topic_files()
    settings = [(s, seed) for scen in config.scenarios for s in load_topic_fixture(topics[scen]) for seed in config.seeds]
    if gateway is None and (_needs_gateway(config.challenger) or _needs_gateway(config.opponent)):
        gateway = build_gateway(config)
    templates = TemplateSet.load()
    transcripts_dir = config.out / "transcripts"

    def play(item: tuple[TopicSetting, int]) -> GameRecord:
        setting, seed = item
        agents = {}
        for p in setting.players:
            if p == setting.challenger_position:
                agents[p] = make_agent(config.challenger, p, seed, config.pgm, gateway, templates)
            else:
                agents[p] = make_agent(config.opponent, p, seed, False, gateway, templates)
        outcome, transcript = run_competition(setting, agents, seed, templates)
        labels = {p: (config.challenger_label if p == setting.challenger_position else config.opponent) for p in agents}
        paths = write_transcript(transcripts_dir, transcript, seed, labels)
        return GameRecord(setting, seed, outcome, paths, counts_for(transcript))

    if config.jobs == 1:
        records = [play(item) for item in settings]
    else:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(play, settings))  # submission order, whatever the finish order

    counts = merge_counts(r.counts for r in records)
    scores = compute_scores(counts)
    artifacts = [p for r in records for p in r.paths]
    artifacts += write_report(config.out, counts, scores, config.challenger_label)

    failures = []
    exit_code = EXIT_OK
    for r in records:
        if r.outcome.aborted:
            failures.append({"game_id": f"{r.setting.scenario.value}-{r.setting.id}-{r.seed}", **r.outcome.details, "reason": r.outcome.reason})
    if failures:
        exit_code = max(abort_exit_code(f) for f in failures)
        artifacts.append(_write_json(config.out / "failures.json", {"exit_code": exit_code, "failures": failures}))

    games = [
        {
            "scenario": r.setting.scenario.value,
            "setting_id": r.setting.id,
            "seed": r.seed,
            "status": "aborted" if r.outcome.aborted else "ok",
            "transcript": str(r.paths[0].relative_to(config.out)),
        }
        for r in records
    ]
    _write_manifest(config.out, config, topics, games, artifacts)
    return TournamentResult(exit_code, records, counts, scores, failures, artifacts)


def _subclasses(cls: type) -> set[type]:
    out = set()
    for sub in cls.__subclasses__():
        out |= {sub} | _subclasses(sub)
    return out


def abort_exit_code(details: dict[str, Any]) -> int:
    """4 when a game died on a gateway error (missing fixture, auth, retries exhausted), else 3."""
    gateway_errors = {c.__name__ for c in _subclasses(GatewayError)} | {GatewayError.__name__}
    return EXIT_GATEWAY if details.get("error") in gateway_errors else EXIT_ABORTS


def challenger_labels(root: Path) -> list[str]:
    labels = set()
    for path in find_transcripts(root):
        meta = json.loads(path.with_suffix(".meta.json").read_text(encoding="utf-8"))
        seat = str(meta["setting"]["challenger_position"])
        labels.add(meta.get("agents", {}).get(seat, ""))
    return sorted(labels)


def report_from_transcripts(root: Path, out: Path | None = None) -> tuple[MetricCounts, CapabilityScores, list[Path]]:
    """Recompute counts and scores from stored transcripts only; writes report.json and radar.csv."""
    root = Path(root)
    transcripts = load_transcripts(root)  # raises before anything is written
    counts = merge_counts(counts_for(t) for t in transcripts)
    scores = compute_scores(counts)
    label = ",".join(challenger_labels(root))
    paths = write_report(Path(out) if out else root, counts, scores, label)
    return counts, scores, paths
