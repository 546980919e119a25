"""Domain types shared by controllers, scenario generators and metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union


class Stage(str, Enum):
    TRANSIENT = "transient"
    WORKING = "working"
    DURABLE = "durable"
    EVICTED = "evicted"
    COMPRESSED = "compressed"


LIVE_STAGES = (Stage.TRANSIENT, Stage.WORKING, Stage.DURABLE)
PROTECTED_STAGES = (Stage.WORKING, Stage.DURABLE)

# Legal stage moves after admission.  Evicted and Compressed are sinks.
ALLOWED_TRANSITIONS: dict[Stage, frozenset[Stage]] = {
    Stage.TRANSIENT: frozenset({Stage.WORKING, Stage.EVICTED, Stage.COMPRESSED}),
    Stage.WORKING: frozenset({Stage.DURABLE, Stage.EVICTED, Stage.COMPRESSED}),
    Stage.DURABLE: frozenset({Stage.EVICTED, Stage.COMPRESSED}),
    Stage.EVICTED: frozenset(),
    Stage.COMPRESSED: frozenset(),
}

# Summary records get ids far above anything a generator assigns.
SUMMARY_ID_BASE = 100_000


class StreamError(ValueError):
    pass


def clip01(x: float) -> float:
    if not math.isfinite(x):
        raise ValueError("non-finite scalar")
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class Labels:
    """Ground truth for one item.  Controllers must not read it."""

    is_premise: bool = False
    is_support: bool = False
    is_false_premise: bool = False
    is_local_distractor: bool = False
    is_late_important: bool = False
    true_consequence: float = 0.0
    # quadrant probe role ("HcHs", ...) or "" when the item is not a probe
    probe: str = ""

    def roles(self) -> list[str]:
        names = ("is_premise", "is_support", "is_false_premise",
                 "is_local_distractor", "is_late_important")
        return [n for n in names if getattr(self, n)]


@dataclass(frozen=True)
class CueFeatures:
    """Signals a controller is allowed to look at."""

    evidence_confidence: float = 0.5
    shock: float = 0.0
    importance_cue: float = 0.0
    constraint_language_cue: bool = False
    query_relevance: float = 0.0
    # similarity to content already seen; the front-door merge test reads it
    redundancy: float = 0.0
    # policy-visible strength channel, filled according to the stream's
    # strength source
    strength_signal: float = 0.0

    def reals(self) -> dict[str, float]:
        return {
            "evidence_confidence": self.evidence_confidence,
            "shock": self.shock,
            "importance_cue": self.importance_cue,
            "query_relevance": self.query_relevance,
            "redundancy": self.redundancy,
            "strength_signal": self.strength_signal,
        }


@dataclass
class MemoryItem:
    id: int
    content_key: str
    confidence: float = 0.0
    strength: float = 0.0
    stage: Stage = Stage.TRANSIENT
    created_step: int = 0
    last_touched_step: int = 0
    touch_count: int = 1
    labels: Labels = field(default_factory=Labels)
    cues: CueFeatures = field(default_factory=CueFeatures)
    summary_id: int | None = None
    # set when an accepted conflicting revision overwrote the stored content
    revised: bool = False
    constituents: tuple[int, ...] = ()

    @property
    def is_summary(self) -> bool:
        return bool(self.constituents)

    @property
    def live(self) -> bool:
        return self.stage in LIVE_STAGES

    def fresh_copy(self) -> "MemoryItem":
        """Copy of a stream template, reset to its admission state."""
        return MemoryItem(
            id=self.id,
            content_key=self.content_key,
            confidence=self.cues.evidence_confidence,
            strength=0.0,
            stage=Stage.TRANSIENT,
            created_step=self.created_step,
            last_touched_step=self.created_step,
            touch_count=1,
            labels=self.labels,
            cues=self.cues,
        )


@dataclass(frozen=True)
class QuerySpec:
    required_premise_ids: frozenset[int] = frozenset()
    required_support_ids: frozenset[int] = frozenset()
    forbidden_governing_ids: frozenset[int] = frozenset()
    # probe queries feed Hit@1/MRR; exactly one query per stream is final
    final: bool = False
    target_id: int | None = None

    @property
    def required_ids(self) -> frozenset[int]:
        return self.required_premise_ids | self.required_support_ids


@dataclass(frozen=True)
class Admit:
    step: int
    item: MemoryItem


@dataclass(frozen=True)
class Evidence:
    step: int
    item_id: int
    confidence: float
    sign: int = 1


@dataclass(frozen=True)
class Query:
    step: int
    spec: QuerySpec


@dataclass(frozen=True)
class PressureTick:
    step: int


Event = Union[Admit, Evidence, Query, PressureTick]


@dataclass(frozen=True)
class CapacityConfig:
    transient_cap: int = 4
    working_cap: int = 4
    durable_cap: int = 2
    flat_cap: int = 10
    soft_budget: int = 10

    def __post_init__(self) -> None:
        for name in ("transient_cap", "working_cap", "durable_cap", "flat_cap", "soft_budget"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.soft_budget > self.flat_cap:
            raise ValueError("soft_budget must not exceed flat_cap")

    @property
    def staged_total(self) -> int:
        return self.transient_cap + self.working_cap + self.durable_cap

    def stage_cap(self, stage: Stage) -> int:
        return {
            Stage.TRANSIENT: self.transient_cap,
            Stage.WORKING: self.working_cap,
            Stage.DURABLE: self.durable_cap,
        }[stage]


@dataclass(frozen=True)
class TraceRecord:
    step: int
    item_id: int
    action: str
    from_stage: str
    to_stage: str
    c: float
    m: float

    def line(self) -> str:
        return (f"{self.step}\t{self.item_id}\t{self.action}\t{self.from_stage}"
                f"\t{self.to_stage}\t{self.c:.6f}\t{self.m:.6f}")


def validate_stream(stream) -> list[str]:
    """Return every invariant violation in ``stream``; empty means ok."""
    violations: list[str] = []
    admitted: set[int] = set()
    last_step: int | None = None
    finals = 0
    for ev in stream.events:
        if last_step is not None and ev.step <= last_step:
            violations.append(f"non-monotone step at {ev.step}")
        last_step = ev.step
        if isinstance(ev, Admit):
            item = ev.item
            if item.id in admitted:
                violations.append(f"duplicate id {item.id} at step {ev.step}")
            admitted.add(item.id)
            if len(item.labels.roles()) > 1:
                violations.append(f"label conflict on item {item.id}")
            for name, value in item.cues.reals().items():
                if not 0.0 <= value <= 1.0:
                    violations.append(f"cue {name} out of range on item {item.id}")
            if not 0.0 <= item.labels.true_consequence <= 1.0:
                violations.append(f"true_consequence out of range on item {item.id}")
        elif isinstance(ev, Evidence):
            if ev.item_id not in admitted:
                violations.append(f"dangling id {ev.item_id} at step {ev.step}")
            if ev.sign not in (1, -1):
                violations.append(f"bad evidence sign at step {ev.step}")
            if not 0.0 <= ev.confidence <= 1.0:
                violations.append(f"evidence confidence out of range at step {ev.step}")
        elif isinstance(ev, Query):
            spec = ev.spec
            if (spec.required_premise_ids & spec.required_support_ids
                    or spec.required_premise_ids & spec.forbidden_governing_ids
                    or spec.required_support_ids & spec.forbidden_governing_ids):
                violations.append(f"overlapping query id sets at step {ev.step}")
            if spec.final:
                finals += 1
    if stream.events and finals != 1:
        violations.append(f"expected exactly one final query, found {finals}")
    return violations
