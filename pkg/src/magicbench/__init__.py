"""Multi-agent game benchmark: five games, a moderator engine, agents and capability metrics."""

from .core import Scenario, Role, Stage, TopicSetting, Transcript, load_topic_fixture, validate_topic_setting, view_for
from .engine import Outcome, run_competition
from .metrics import CapabilityScores, MetricCounts, compute_scores, extract_counts

__all__ = [
    "CapabilityScores",
    "MetricCounts",
    "Outcome",
    "Role",
    "Scenario",
    "Stage",
    "TopicSetting",
    "Transcript",
    "compute_scores",
    "extract_counts",
    "load_topic_fixture",
    "run_competition",
    "validate_topic_setting",
    "view_for",
]
__version__ = "0.1.0"
