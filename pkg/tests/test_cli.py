from __future__ import annotations

import hashlib
import json

import pytest

from magicbench.cli import main
from magicbench.tournament import ConfigError, TournamentConfig


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_public_good_only(tmp_path, capsys, no_network):
    code, out, _ = run(capsys, "tournament", "--scenarios", "public_good", "--out", tmp_path)
    assert code == 0
    assert len(list(tmp_path.rglob("*.jsonl"))) == 21
    report = json.loads((tmp_path / "report.json").read_text())
    insufficient = set(report["scores"]["insufficient"])
    assert {"judgement", "reasoning", "deception", "self_awareness", "cooperation", "coordination"} <= insufficient
    assert "rationality" not in insufficient
    assert report["scores"]["role_win_rates"]["contributor"] is not None
    assert json.loads(out)["games"] == 21


def test_manifest_hashes_every_artifact(tmp_path, capsys):
    assert run(capsys, "tournament", "--scenarios", "prisoners_dilemma", "--out", tmp_path)[0] == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["scenarios"] == ["prisoners_dilemma"]
    assert len(manifest["games"]) == 21 and {g["status"] for g in manifest["games"]} == {"ok"}
    written = {p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*") if p.is_file()} - {"manifest.json"}
    assert set(manifest["artifacts"]) == written
    for rel, digest in manifest["artifacts"].items():
        assert hashlib.sha256((tmp_path / rel).read_bytes()).hexdigest() == digest
    assert manifest["fixtures"]["prisoners_dilemma"]["sha256"]


def test_report_reproduces_tournament_scores(tmp_path, capsys):
    run(capsys, "tournament", "--scenarios", "cost_sharing,undercover", "--out", tmp_path / "t")
    before = (tmp_path / "t" / "report.json").read_bytes()
    code, out, _ = run(capsys, "report", tmp_path / "t", "--out", tmp_path / "r")
    assert code == 0
    assert (tmp_path / "r" / "report.json").read_bytes() == before
    assert (tmp_path / "r" / "radar.csv").read_bytes() == (tmp_path / "t" / "radar.csv").read_bytes()


def test_report_on_empty_directory(tmp_path, capsys):
    code, _, err = run(capsys, "report", tmp_path)
    assert code == 2
    assert "no transcripts" in json.loads(err)["error"]
    assert list(tmp_path.iterdir()) == []


def test_report_with_missing_sidecar_writes_nothing(tmp_path, capsys):
    run(capsys, "tournament", "--scenarios", "public_good", "--out", tmp_path / "t")
    victim = sorted((tmp_path / "t").rglob("*.meta.json"))[0]
    victim.unlink()
    code, _, err = run(capsys, "report", tmp_path / "t", "--out", tmp_path / "r")
    assert code == 2
    assert json.loads(err)["files"] == [str(victim).replace(".meta.json", ".jsonl")]
    assert not (tmp_path / "r").exists()


def test_replay_with_missing_fixture(tmp_path, capsys, no_network):
    code, out, _ = run(
        capsys,
        "tournament",
        "--challenger", "model-x",
        "--scenarios", "public_good",
        "--fixtures", tmp_path / "empty",
        "--out", tmp_path / "out",
    )
    assert code == 4
    summary = json.loads(out)
    assert summary["aborted"] == 21
    first = summary["failures"][0]
    assert first["error"] == "FixtureMiss" and len(first["fingerprint"]) == 64
    failures = json.loads((tmp_path / "out" / "failures.json").read_text())
    assert failures["exit_code"] == 4 and len(failures["failures"]) == 21


def test_non_gateway_abort_exit_three(tmp_path, capsys, monkeypatch):
    from magicbench.agents import ScriptedAgent

    def boom(self, view, directive):
        raise RuntimeError("agent crashed")

    monkeypatch.setattr(ScriptedAgent, "act", boom)
    code, out, _ = run(capsys, "tournament", "--scenarios", "public_good", "--out", tmp_path)
    assert code == 3
    assert json.loads(out)["failures"][0]["error"] == "RuntimeError"


@pytest.mark.parametrize(
    "argv",
    [
        ["tournament", "--jobs", "0"],
        ["tournament", "--seed", ","],
        ["tournament", "--pgm"],  # scripted challenger has no PGM variant
    ],
)
def test_config_errors_exit_two(tmp_path, capsys, argv):
    code, _, err = run(capsys, *argv, "--out", tmp_path)
    assert code == 2
    assert "error" in json.loads(err)


def test_unknown_scenario_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["tournament", "--scenarios", "poker"])
    assert exc.value.code == 2


def test_topics_must_cover_scenarios(tmp_path, capsys):
    from magicbench.tournament import default_topic_path
    from magicbench.core import Scenario

    code, _, _ = run(capsys, "tournament", "--scenarios", "public_good,chameleon",
                     "--topics", default_topic_path(Scenario.PUBLIC_GOOD), "--out", tmp_path)
    assert code == 2


def test_config_validation():
    with pytest.raises(ConfigError):
        TournamentConfig(scenarios=())
    assert TournamentConfig(challenger="m", pgm=True).challenger_label == "m+pgm"


def test_run_single_game(tmp_path, capsys):
    code, out, _ = run(capsys, "run", "--scenario", "prisoners_dilemma", "--setting", "pd-3-1",
                       "--challenger", "scripted:always_defect", "--out", tmp_path)
    outcome = json.loads(out)
    assert code == 0 and outcome["scenario"] == "prisoners_dilemma"
    assert len(list(tmp_path.rglob("*.jsonl"))) == 1


def test_run_unknown_setting(capsys):
    code, _, err = run(capsys, "run", "--scenario", "chameleon", "--setting", "nope")
    assert code == 2 and "nope" in json.loads(err)["error"]


def test_seeds_multiply_games(tmp_path, capsys):
    code, out, _ = run(capsys, "tournament", "--scenarios", "public_good", "--seed", "0,1", "--jobs", "3", "--out", tmp_path)
    assert code == 0 and json.loads(out)["games"] == 42
