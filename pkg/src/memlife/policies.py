"""Baseline controller zoo behind the shared controller interface."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .core import (
    LIVE_STAGES,
    CapacityConfig,
    Evidence,
    MemoryItem,
    QuerySpec,
    Stage,
    TraceRecord,
)
from .dynamics import DynamicsParams, SalienceFeatures, UpdateRule, salience_score
from .stagemem import (
    BaseController,
    ControllerError,
    QueryLog,
    ReadoutResult,
    StageMemController,
    StageThresholds,
)

FAMILIES = ("component-ablation", "control-style analogue", "heuristic", "summary-cycle")


class UnknownPolicyError(KeyError):
    pass


# ---------------------------------------------------------------- staged ablations


class ConfidenceOnlyController(StageMemController):
    name = "confidence_only"

    def gate(self, item: MemoryItem, stage: Stage) -> bool:
        if item.is_summary or item.revised:
            return False
        tau_c, _ = self.thresholds.for_boundary(stage)
        return item.confidence >= tau_c

    def rank_key(self, item: MemoryItem) -> float:
        return item.confidence


class StrengthOnlyController(StageMemController):
    name = "strength_only"

    def gate(self, item: MemoryItem, stage: Stage) -> bool:
        if item.is_summary or item.revised:
            return False
        _, tau_r = self.thresholds.for_boundary(stage)
        return item.strength >= tau_r

    def rank_key(self, item: MemoryItem) -> float:
        return item.strength

    def accepts_revision(self, item: MemoryItem, ev: Evidence) -> bool:
        # no validity state, so any conflicting write replaces the content
        return True


class SingleStateController(StageMemController):
    """One scalar s per item, stored in both c and m so the trace stays uniform."""

    name = "single_state"

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.rule = UpdateRule(self.params, use_strength_resistance=False)

    def register(self, template: MemoryItem, stage: Stage) -> MemoryItem:
        item = super().register(template, stage)
        item.confidence = item.strength
        return item

    def apply_update(self, item: MemoryItem, c_hat: float, sign: int) -> None:
        s, _, _ = self.rule.apply(item.confidence, item.strength, c_hat, sign,
                                  item.cues.shock, item.stage)
        item.confidence = item.strength = s
        self.record(item, "update")

    def gate(self, item: MemoryItem, stage: Stage) -> bool:
        if item.is_summary or item.revised:
            return False
        tau_c, tau_r = self.thresholds.for_boundary(stage)
        return item.strength >= tau_c and item.strength >= tau_r

    def rank_key(self, item: MemoryItem) -> float:
        return item.strength


# ---------------------------------------------------------------- flat stores


class FlatController(BaseController):
    """One store; overflow evicts the lowest (key, id) item.  Subclasses pick the key."""

    name = "flat"
    store_stage = Stage.WORKING

    def __init__(self, capacity: CapacityConfig, params: DynamicsParams | None = None,
                 scorer=None, **kw):
        super().__init__(capacity, params, scorer)
        if kw:
            raise ControllerError(f"unknown parameters for {self.name}: {sorted(kw)}")

    def key(self, item: MemoryItem) -> Any:
        raise NotImplementedError

    def hard_cap(self) -> int:
        return self.capacity.flat_cap

    def on_admit(self, template: MemoryItem) -> None:
        self.register(template, self.store_stage)
        self.enforce()

    def evictable(self) -> list[MemoryItem]:
        return self.live_items()

    def enforce(self) -> None:
        cap = self.hard_cap()
        while len(self.live_items()) > cap:
            pool = self.evictable()
            if not pool:
                break
            victim = min(pool, key=lambda i: (self.key(i), i.id))
            self.evict(victim)


class SingleLayerController(FlatController):
    """Keeps everything; only past twice the soft budget does the oldest item go."""

    name = "single_layer"

    def key(self, item):
        return item.created_step

    def hard_cap(self) -> int:
        return min(self.capacity.flat_cap, 2 * self.capacity.soft_budget)


class RecencyController(FlatController):
    name = "recency"

    def key(self, item):
        return item.last_touched_step


class FrequencyController(FlatController):
    name = "frequency"

    def key(self, item):
        return item.touch_count


class QueryRelevanceController(FlatController):
    name = "query_relevance"

    def key(self, item):
        return item.cues.query_relevance


class GenericImportanceController(FlatController):
    name = "generic_importance"

    def key(self, item):
        return item.cues.importance_cue


class CueAwareFlatController(FlatController):
    name = "cue_aware_flat"

    def key(self, item):
        return (item.cues.importance_cue, item.cues.constraint_language_cue)


class ConfidenceFlatController(FlatController):
    name = "confidence_flat"

    def key(self, item):
        return item.confidence


class BinaryFlagController(FlatController):
    """Flagged items (importance_cue >= threshold) are never evicted.

    Unflagged items live in a recency-evicted side store that a maintenance
    tick clears completely.
    """

    name = "binary_flag"

    def __init__(self, capacity, params=None, scorer=None, flag_threshold: float = 0.5):
        super().__init__(capacity, params, scorer)
        self.flag_threshold = flag_threshold

    def on_admit(self, template):
        flagged = template.cues.importance_cue >= self.flag_threshold
        self.register(template, Stage.DURABLE if flagged else Stage.TRANSIENT)
        self.enforce()

    def key(self, item):
        return item.last_touched_step

    def evictable(self):
        return self.live_items(Stage.TRANSIENT)

    def on_tick(self):
        for item in sorted(self.live_items(Stage.TRANSIENT), key=lambda i: i.id):
            self.evict(item)


class FrontDoorController(FlatController):
    """Write-time merge-vs-create, no maintenance-time protection.

    A candidate whose redundancy reaches ``tau`` is folded into the most
    recent live record and loses its own identity; with no record to fold
    into it is dropped.  Below ``tau`` it becomes a new record.
    """

    name = "front_door"

    def __init__(self, capacity, params=None, scorer=None, tau: float = 0.70):
        super().__init__(capacity, params, scorer)
        if not 0.0 <= tau <= 1.0:
            raise ControllerError("front_door tau must lie in [0, 1]")
        self.tau = tau

    def key(self, item):
        return item.last_touched_step

    def on_admit(self, template):
        if template.cues.redundancy < self.tau:
            self.register(template, self.store_stage)
            self.enforce()
            return
        item = self.register(template, self.store_stage)
        live = [i for i in self.live_items() if i.id != item.id]
        if not live:
            self.move(item, Stage.EVICTED, "drop")
            self.counters["drops"] += 1
            return
        target = max(live, key=lambda i: (i.last_touched_step, i.id))
        self.touch(target)
        item.summary_id = target.id
        self.move(item, Stage.COMPRESSED, "merge")
        self.counters["merges"] += 1


class FrontDoorGateController(FlatController):
    """Admission-time confidence gate in front of a recency-evicted flat store."""

    name = "front_door_gate"

    def __init__(self, capacity, params=None, scorer=None, gate: float = 0.5):
        super().__init__(capacity, params, scorer)
        self.gate_threshold = gate

    def key(self, item):
        return item.last_touched_step

    def on_admit(self, template):
        item = self.register(template, self.store_stage)
        if item.confidence < self.gate_threshold:
            self.move(item, Stage.EVICTED, "reject")
            self.counters["rejections"] += 1
            return
        self.enforce()


class ReinforcedFlatController(FlatController):
    """Forgetting-curve retention: importance * exp(-age / (H * touches)).

    Overflow evicts the lowest score; a maintenance tick also drops every
    item whose score fell under ``floor``.
    """

    name = "reinforced_flat"

    def __init__(self, capacity, params=None, scorer=None, half_life: float = 8.0,
                 floor: float = 0.25):
        super().__init__(capacity, params, scorer)
        if half_life <= 0:
            raise ControllerError("reinforced_flat half_life must be > 0")
        self.half_life = half_life
        self.floor = floor

    def score(self, item: MemoryItem) -> float:
        age = self.step - item.last_touched_step
        return item.cues.importance_cue * math.exp(-age / (self.half_life * item.touch_count))

    def key(self, item):
        return self.score(item)

    def on_tick(self):
        for item in sorted(self.live_items(), key=lambda i: i.id):
            if self.score(item) < self.floor:
                self.evict(item)


class AggressiveTieringController(FlatController):
    """Shallow tier spills eagerly into a deep tier that evicts only at twice its cap.

    Shallow holds ``shallow_cap`` items; the nominal deep cap is
    ``(flat_cap - shallow_cap) // 2`` so the hard total never exceeds
    ``flat_cap``.  A tick flushes the shallow tier: items whose importance
    reaches ``spill_threshold`` move deep, the rest are dropped.
    """

    name = "aggressive_tiering"

    def __init__(self, capacity, params=None, scorer=None, shallow_cap: int | None = None,
                 spill_threshold: float = 0.4):
        super().__init__(capacity, params, scorer)
        cap = capacity.flat_cap
        self.shallow_cap = shallow_cap if shallow_cap is not None else max(1, cap // 3)
        if not 1 <= self.shallow_cap <= cap:
            raise ControllerError("shallow_cap must lie in [1, flat_cap]")
        self.deep_cap = max(1, math.ceil((cap - self.shallow_cap) / 2))
        self.spill_threshold = spill_threshold

    def key(self, item):
        return item.last_touched_step

    def on_admit(self, template):
        self.register(template, Stage.WORKING)
        shallow = self.live_items(Stage.WORKING)
        while len(shallow) > self.shallow_cap:
            # paging is first-in first-out by arrival
            oldest = min(shallow, key=lambda i: (i.created_step, i.id))
            self.move(oldest, Stage.DURABLE, "spill")
            shallow = self.live_items(Stage.WORKING)
        self.enforce_deep()

    def enforce_deep(self):
        hard = min(2 * self.deep_cap, self.capacity.flat_cap - self.shallow_cap)
        deep = self.live_items(Stage.DURABLE)
        while len(deep) > hard:
            self.evict(min(deep, key=lambda i: (i.last_touched_step, i.id)))
            deep = self.live_items(Stage.DURABLE)

    def on_tick(self):
        for item in sorted(self.live_items(Stage.WORKING), key=lambda i: i.id):
            if item.cues.importance_cue >= self.spill_threshold:
                self.move(item, Stage.DURABLE, "spill")
            else:
                self.evict(item)
        self.enforce_deep()


class HybridLayeringController(FlatController):
    """Recency buffer in front of an importance-gated store, each with its own cap.

    The buffer is least-recently-touched first out; a released item enters
    the store only if its importance cue reaches the threshold.
    """

    name = "hybrid_layering"

    def __init__(self, capacity, params=None, scorer=None, buffer_cap: int | None = None,
                 importance_threshold: float = 0.7):
        super().__init__(capacity, params, scorer)
        cap = capacity.flat_cap
        self.buffer_cap = buffer_cap if buffer_cap is not None else max(2, cap // 4)
        if not 1 <= self.buffer_cap < cap:
            raise ControllerError("buffer_cap must lie in [1, flat_cap)")
        self.store_cap = cap - self.buffer_cap
        self.importance_threshold = importance_threshold

    def key(self, item):
        return item.cues.importance_cue

    def on_admit(self, template):
        self.register(template, Stage.TRANSIENT)
        buf = self.live_items(Stage.TRANSIENT)
        while len(buf) > self.buffer_cap:
            self.release(min(buf, key=lambda i: (i.last_touched_step, i.id)))
            buf = self.live_items(Stage.TRANSIENT)

    def release(self, item: MemoryItem) -> None:
        if item.cues.importance_cue >= self.importance_threshold:
            self.move(item, Stage.WORKING, "promote")
            store = self.live_items(Stage.WORKING)
            if len(store) > self.store_cap:
                self.evict(min(store, key=lambda i: (self.key(i), i.id)))
        else:
            self.evict(item)



# ---------------------------------------------------------------- summary cycles


class SummaryCycleController(BaseController):
    """Lossy re-summarization: every tick rebuilds one summary of ``budget`` items.

    Between ticks admitted items sit in a working context.  At a tick the
    previous summary plus the new context compete; ``select`` keeps at most
    ``budget`` of them in the summary (stage DURABLE) and the rest become
    COMPRESSED, i.e. lost.
    """

    name = "summary_cycle"
    staged = True

    def __init__(self, capacity, params=None, scorer=None, budget: int | None = None):
        super().__init__(capacity, params, scorer)
        self.budget = budget if budget is not None else capacity.durable_cap
        if self.budget < 1:
            raise ControllerError("summary budget must be >= 1")
        self.cycle = 0
        # per tick: ids answerable after that cycle's summary
        self.cycle_survivors: list[frozenset[int]] = []

    def priority(self, item: MemoryItem) -> Any:
        raise NotImplementedError

    def select(self, pool: list[MemoryItem]) -> list[MemoryItem]:
        ranked = sorted(pool, key=lambda i: (self.priority(i), i.id), reverse=True)
        return ranked[:self.budget]

    def on_admit(self, template):
        self.register(template, Stage.WORKING)

    def on_tick(self):
        self.cycle += 1
        pool = [i for i in self.live_items() if not i.revised]
        keep = {i.id for i in self.select(pool)}
        for item in sorted(pool, key=lambda i: i.id):
            if item.id in keep:
                if item.stage != Stage.DURABLE:
                    self.move(item, Stage.DURABLE, "summarize")
            else:
                item.summary_id = None
                self.move(item, Stage.COMPRESSED, "drop_from_summary")
                self.counters["compressions"] += 1
        self.cycle_survivors.append(frozenset(keep))

    def over_budget(self) -> bool:
        return len(self.live_items(Stage.DURABLE)) > self.budget

    def load_capacity(self) -> int:
        return self.budget


class StrengthAwareSummary(SummaryCycleController):
    """Items clearing both durable gates enter first, the rest fill by c*m."""

    name = "strength_aware"

    def __init__(self, capacity, params=None, scorer=None, budget=None,
                 thresholds: StageThresholds | None = None):
        super().__init__(capacity, params, scorer, budget)
        self.thresholds = thresholds or StageThresholds()

    def priority(self, item):
        gated = (item.confidence >= self.thresholds.tau_c_durable
                 and item.strength >= self.thresholds.tau_r_durable)
        return (gated, item.confidence * item.strength)


class ConfidenceOnlySummary(SummaryCycleController):
    name = "confidence_only_summary"

    def priority(self, item):
        return item.confidence


class FlatSalienceSummary(SummaryCycleController):
    name = "flat_salience"

    def priority(self, item):
        return salience_score(SalienceFeatures.from_cues(item.cues), self.scorer)


class FrequencySummary(SummaryCycleController):
    name = "frequency_summary"

    def priority(self, item):
        return item.touch_count


class RecencySummary(SummaryCycleController):
    name = "recency_summary"

    def priority(self, item):
        return item.last_touched_step


# ---------------------------------------------------------------- registry


@dataclass(frozen=True)
class PolicySpec:
    name: str
    family: str
    factory: Callable[..., BaseController]
    label: str = ""
    params: dict[str, Any] = field(default_factory=dict)


def _spec(name, family, factory, label, **params) -> PolicySpec:
    return PolicySpec(name, family, factory, label, params)


REGISTRY: dict[str, PolicySpec] = {s.name: s for s in (
    _spec("stagemem", "component-ablation", StageMemController, "StageMem"),
    _spec("confidence_only", "component-ablation", ConfidenceOnlyController, "Confidence-only"),
    _spec("strength_only", "component-ablation", StrengthOnlyController, "Strength-only lifecycle"),
    _spec("single_state", "component-ablation", SingleStateController, "Single-state"),
    _spec("single_layer", "component-ablation", SingleLayerController, "Single-layer"),
    _spec("binary_flag", "heuristic", BinaryFlagController, "Binary strength flag"),
    _spec("cue_aware_flat", "heuristic", CueAwareFlatController, "Cue-aware flat score"),
    _spec("confidence_flat", "heuristic", ConfidenceFlatController, "Confidence flat"),
    _spec("front_door", "control-style analogue", FrontDoorController, "Mem0-style"),
    _spec("front_door_gate", "control-style analogue", FrontDoorGateController,
          "Front-door gate only"),
    _spec("reinforced_flat", "control-style analogue", ReinforcedFlatController,
          "MemoryBank-style"),
    _spec("aggressive_tiering", "control-style analogue", AggressiveTieringController,
          "MemGPT-style"),
    _spec("hybrid_layering", "control-style analogue", HybridLayeringController, "HiMem-style"),
    _spec("recency", "heuristic", RecencyController, "Recency priority"),
    _spec("frequency", "heuristic", FrequencyController, "Frequency priority"),
    _spec("query_relevance", "heuristic", QueryRelevanceController, "Query relevance priority"),
    _spec("generic_importance", "heuristic", GenericImportanceController,
          "Generic importance priority"),
    _spec("strength_aware", "summary-cycle", StrengthAwareSummary, "Strength-aware"),
    _spec("confidence_only_summary", "summary-cycle", ConfidenceOnlySummary, "Confidence-only"),
    _spec("flat_salience", "summary-cycle", FlatSalienceSummary, "Flat salience"),
    _spec("frequency_summary", "summary-cycle", FrequencySummary, "Frequency"),
    _spec("recency_summary", "summary-cycle", RecencySummary, "Recency"),
)}


def policy_names() -> list[str]:
    return list(REGISTRY)


def get_spec(name: str) -> PolicySpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownPolicyError(
            f"unknown policy {name!r}; registry: {', '.join(REGISTRY)}") from None


def make_policy(spec: PolicySpec | str, capacity: CapacityConfig,
                params: DynamicsParams | None = None,
                thresholds: StageThresholds | None = None,
                overrides: dict[str, Any] | None = None) -> BaseController:
    """Instantiate a controller.  ``overrides`` are the policy's own parameters."""
    if isinstance(spec, str):
        spec = get_spec(spec)
    kw = {**spec.params, **(overrides or {})}
    if issubclass(spec.factory, StageMemController) or spec.factory is StrengthAwareSummary:
        if thresholds is not None:
            kw.setdefault("thresholds", thresholds)
    try:
        return spec.factory(capacity, params, **kw)
    except TypeError as exc:
        raise ControllerError(f"bad parameters for policy {spec.name}: {exc}") from None


# ---------------------------------------------------------------- running


@dataclass
class EpisodeTrace:
    policy: str
    records: list[TraceRecord]
    counters: dict[str, int]
    steps: int
    over_budget_steps: int
    queries: list[QueryLog]
    final_items: dict[int, MemoryItem]
    load_capacity: int
    staged: bool
    cycle_survivors: list[frozenset[int]] = field(default_factory=list)

    @property
    def final(self) -> QueryLog | None:
        for q in reversed(self.queries):
            if q.spec.final:
                return q
        return None

    @property
    def readout(self) -> ReadoutResult | None:
        q = self.final
        return q.readout if q else None

    def live_ids(self) -> list[int]:
        return sorted(i for i, it in self.final_items.items() if it.stage in LIVE_STAGES)


def run_policy(controller: BaseController, stream) -> EpisodeTrace:
    controller.run(stream.events)
    return EpisodeTrace(
        policy=controller.name,
        records=list(controller.trace),
        counters=dict(controller.counters),
        steps=controller.steps_seen,
        over_budget_steps=controller.over_budget_steps,
        queries=list(controller.queries),
        final_items=controller.items,
        load_capacity=controller.load_capacity(),
        staged=controller.staged,
        cycle_survivors=list(getattr(controller, "cycle_survivors", [])),
    )
