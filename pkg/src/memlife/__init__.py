"""Post-admission memory lifecycle control: StageMem, baselines and a diagnostic harness."""

from .core import (
    Admit,
    CapacityConfig,
    CueFeatures,
    Evidence,
    Labels,
    MemoryItem,
    PressureTick,
    Query,
    QuerySpec,
    Stage,
    clip01,
    validate_stream,
)
from .dynamics import DynamicsParams, UpdateRule
from .metrics import aggregate, compute_metrics
from .policies import make_policy, run_policy
from .scenarios import ScenarioStream, generate
from .stagemem import StageMemController, StageThresholds

__all__ = [
    "Admit", "CapacityConfig", "CueFeatures", "DynamicsParams", "Evidence", "Labels",
    "MemoryItem", "PressureTick", "Query", "QuerySpec", "ScenarioStream", "Stage",
    "StageMemController", "StageThresholds", "UpdateRule", "aggregate", "clip01",
    "compute_metrics", "generate", "make_policy", "run_policy", "validate_stream",
]
__version__ = "0.1.0"
