"""StageMem: transient/working/durable stores with gated settlement.

Also hosts ``BaseController``, the bookkeeping every policy shares: item
registry, trace, counters, readout and the probe ranking.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .core import (
    LIVE_STAGES,
    PROTECTED_STAGES,
    SUMMARY_ID_BASE,
    Admit,
    CapacityConfig,
    Event,
    Evidence,
    MemoryItem,
    PressureTick,
    Query,
    QuerySpec,
    Stage,
    TraceRecord,
)
from .dynamics import (
    DynamicsParams,
    SalienceFeatures,
    SalienceScorer,
    UpdateRule,
    salience_score,
    salience_to_strength,
)

DEPTH = {Stage.DURABLE: 2, Stage.WORKING: 1, Stage.TRANSIENT: 0}
NEXT_STAGE = {Stage.TRANSIENT: Stage.WORKING, Stage.WORKING: Stage.DURABLE}
PROBE_RELEVANCE = 0.5


class ControllerError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReadoutResult:
    prem_ok: bool = False
    supp_ok: bool = False
    governed_by_false: bool = False


@dataclass(frozen=True)
class StageThresholds:
    tau_c_working: float = 0.50
    tau_r_working: float = 0.08
    tau_c_durable: float = 0.90
    tau_r_durable: float = 0.20

    def __post_init__(self) -> None:
        if self.tau_c_durable < self.tau_c_working or self.tau_r_durable < self.tau_r_working:
            raise ValueError("durable-boundary thresholds must not sit below working ones")

    def for_boundary(self, stage: Stage) -> tuple[float, float]:
        if stage == Stage.TRANSIENT:
            return self.tau_c_working, self.tau_r_working
        if stage == Stage.WORKING:
            return self.tau_c_durable, self.tau_r_durable
        raise ValueError(f"no promotion boundary above {stage.value}")


def promote_eligible(item: MemoryItem, tau_c: float, tau_r: float) -> bool:
    return item.confidence >= tau_c and item.strength >= tau_r


@dataclass
class QueryLog:
    spec: QuerySpec
    step: int
    readout: ReadoutResult
    rank: int | None  # 1-based rank of the probe target, None if absent
    missing_evicted: tuple[int, ...]
    answerable: frozenset[int] = frozenset()


class BaseController:
    """Shared bookkeeping.  Subclasses implement the four event handlers."""

    name = "base"
    staged = False

    def __init__(self, capacity: CapacityConfig, params: DynamicsParams | None = None,
                 scorer: SalienceScorer | None = None):
        self.capacity = capacity
        self.params = params or DynamicsParams()
        self.scorer = scorer
        self.rule = UpdateRule(self.params)
        self.items: dict[int, MemoryItem] = {}
        self.trace: list[TraceRecord] = []
        self.counters: Counter[str] = Counter()
        self.queries: list[QueryLog] = []
        self.step = 0
        self.steps_seen = 0
        self.over_budget_steps = 0
        self._budget_hit_this_step = False
        self._next_summary = SUMMARY_ID_BASE
        self._pending: list[TraceRecord] = []

    # event loop

    def on_event(self, ev: Event) -> list[TraceRecord]:
        self.step = ev.step
        self._pending = []
        self._budget_hit_this_step = False
        try:
            if isinstance(ev, Admit):
                if ev.item.id in self.items:
                    raise ControllerError(f"duplicate id {ev.item.id}")
                self.on_admit(ev.item)
            elif isinstance(ev, Evidence):
                self.on_evidence(ev)
            elif isinstance(ev, Query):
                self.on_query(ev.spec)
            elif isinstance(ev, PressureTick):
                self.on_tick()
            else:
                raise ControllerError(f"unknown event type {type(ev).__name__}")
        except ControllerError as exc:
            raise ControllerError(f"step {ev.step}: {exc}") from exc
        self.steps_seen += 1
        if self.over_budget():
            self.over_budget_steps += 1
            self.counters["budget_hits"] += 1
        self.trace.extend(self._pending)
        return self._pending

    def run(self, events: Iterable[Event]) -> "BaseController":
        for ev in events:
            self.on_event(ev)
        return self

    # hooks

    def on_admit(self, template: MemoryItem) -> None:
        raise NotImplementedError

    def on_evidence(self, ev: Evidence) -> None:
        item = self.items.get(ev.item_id)
        if item is None or not item.live:
            return
        self.touch(item)
        if ev.sign < 0 and self.accepts_revision(item, ev):
            item.revised = True
            item.confidence = ev.confidence
            item.touch_count = 1
            item.last_touched_step = self.step
            self.record(item, "revise")
            return
        self.apply_update(item, ev.confidence, ev.sign)

    def on_query(self, spec: QuerySpec) -> None:
        self.log_query(spec)
        for item_id in sorted(spec.required_ids | ({spec.target_id} - {None})):
            item = self.items.get(item_id)
            if item is not None and item.live and not item.revised:
                self.touch(item)
                self.apply_update(item, item.cues.query_relevance, 1)

    def on_tick(self) -> None:
        pass

    def over_budget(self) -> bool:
        return len(self.live_items()) > self.capacity.soft_budget

    def accepts_revision(self, item: MemoryItem, ev: Evidence) -> bool:
        # the stored confidence is the validity gate for revisions
        return ev.confidence > item.confidence

    def apply_update(self, item: MemoryItem, c_hat: float, sign: int) -> None:
        item.confidence, item.strength, _ = self.rule.apply(
            item.confidence, item.strength, c_hat, sign, item.cues.shock, item.stage)
        self.record(item, "update")

    # bookkeeping helpers

    def initial_strength(self, item: MemoryItem) -> float:
        prm = self.params
        if prm.fixed_init_strength is not None:
            return prm.fixed_init_strength
        s = salience_score(SalienceFeatures.from_cues(item.cues), self.scorer)
        return salience_to_strength(s, prm.m_min, prm.m_max)

    def register(self, template: MemoryItem, stage: Stage) -> MemoryItem:
        item = template.fresh_copy()
        item.created_step = item.last_touched_step = self.step
        item.strength = self.initial_strength(item)
        item.stage = stage
        self.items[item.id] = item
        self.counters["admissions"] += 1
        self.record(item, "admit", from_stage="-")
        return item

    def touch(self, item: MemoryItem) -> None:
        item.touch_count += 1
        item.last_touched_step = self.step

    def record(self, item: MemoryItem, action: str, from_stage: str | None = None,
               to_stage: Stage | None = None) -> None:
        self._pending.append(TraceRecord(
            step=self.step,
            item_id=item.id,
            action=action,
            from_stage=from_stage if from_stage is not None else item.stage.value,
            to_stage=(to_stage or item.stage).value,
            c=item.confidence,
            m=item.strength,
        ))

    def move(self, item: MemoryItem, to_stage: Stage, action: str) -> None:
        src = item.stage
        item.stage = to_stage
        self.record(item, action, from_stage=src.value, to_stage=to_stage)
        if action in ("promote", "spill"):
            self.counters["promotions"] += 1
        elif action == "evict":
            self.counters["evictions"] += 1

    def evict(self, item: MemoryItem) -> None:
        self.move(item, Stage.EVICTED, "evict")

    def make_summary(self, group: list[MemoryItem], stage: Stage) -> MemoryItem:
        if len(group) < 2:
            raise ControllerError("compression needs at least two items")
        sid = self._next_summary
        self._next_summary += 1
        summary = MemoryItem(
            id=sid,
            content_key=f"summary:{sid}",
            confidence=sum(i.confidence for i in group) / len(group),
            strength=max(i.strength for i in group),
            stage=stage,
            created_step=self.step,
            last_touched_step=self.step,
            touch_count=1,
            constituents=tuple(i.id for i in group),
        )
        self.items[sid] = summary
        for i in group:
            i.summary_id = sid
            self.move(i, Stage.COMPRESSED, "compress")
        self.counters["compressions"] += 1
        self.record(summary, "summary", from_stage="-")
        return summary

    def live_items(self, stage: Stage | None = None) -> list[MemoryItem]:
        if stage is None:
            return [i for i in self.items.values() if i.live]
        return [i for i in self.items.values() if i.stage == stage]

    def protected_items(self) -> list[MemoryItem]:
        return [i for i in self.items.values() if i.stage in PROTECTED_STAGES]

    def load_capacity(self) -> int:
        return self.capacity.flat_cap

    # readout

    def answerable(self, item_id: int) -> bool:
        item = self.items.get(item_id)
        if item is None or item.revised:
            return False
        return item.stage in LIVE_STAGES

    def readout(self, spec: QuerySpec) -> ReadoutResult:
        prem_ok = bool(spec.required_premise_ids) and all(
            self.answerable(i) for i in spec.required_premise_ids)
        supp_ok = bool(spec.required_support_ids) and all(
            self.answerable(i) for i in spec.required_support_ids)
        governed = any(
            (it := self.items.get(i)) is not None and it.stage in PROTECTED_STAGES
            for i in spec.forbidden_governing_ids)
        return ReadoutResult(prem_ok, supp_ok, governed)

    def probe_rank(self, target_id: int | None) -> int | None:
        """Rank of ``target_id`` among query-near live items: deeper stage, then c*m."""
        if target_id is None or not self.answerable(target_id):
            return None
        pool = [i for i in self.live_items()
                if not i.is_summary and not i.revised
                and (i.cues.query_relevance >= PROBE_RELEVANCE or i.id == target_id)]
        pool.sort(key=lambda i: (-DEPTH[i.stage], -(i.confidence * i.strength), i.id))
        for pos, it in enumerate(pool, start=1):
            if it.id == target_id:
                return pos
        return None

    def log_query(self, spec: QuerySpec) -> None:
        wanted = spec.required_ids | ({spec.target_id} - {None})
        missing = tuple(sorted(
            i for i in wanted
            if i in self.items and self.items[i].stage in (Stage.EVICTED, Stage.COMPRESSED)))
        self.queries.append(QueryLog(
            spec=spec,
            step=self.step,
            readout=self.readout(spec),
            rank=self.probe_rank(spec.target_id),
            missing_evicted=missing,
            answerable=frozenset(i for i in wanted if self.answerable(i)),
        ))
        self.record_query_marker(spec)

    def record_query_marker(self, spec: QuerySpec) -> None:
        if spec.final:
            self.counters["final_queries"] += 1

    def final_readout(self) -> QueryLog | None:
        for q in reversed(self.queries):
            if q.spec.final:
                return q
        return None


class StageMemController(BaseController):
    """Reference controller: two-gate promotion plus budgeted settlement."""

    name = "stagemem"
    staged = True
    compress_stages = (Stage.WORKING, Stage.DURABLE)

    def __init__(self, capacity: CapacityConfig, params: DynamicsParams | None = None,
                 thresholds: StageThresholds | None = None,
                 scorer: SalienceScorer | None = None,
                 allow_nested_summaries: bool = False,
                 summary_fidelity: float | None = None):
        super().__init__(capacity, params, scorer)
        self.thresholds = thresholds or StageThresholds()
        self.allow_nested_summaries = allow_nested_summaries
        # if set, a constituent whose strength reached this value at
        # compression time stays answerable through its summary
        self.summary_fidelity = summary_fidelity
        self._kept_through_summary: set[int] = set()
        self._durable_overflowed = False

    # policy knobs the ablations override

    def gate(self, item: MemoryItem, stage: Stage) -> bool:
        if item.is_summary or item.revised:
            return False
        tau_c, tau_r = self.thresholds.for_boundary(stage)
        return promote_eligible(item, tau_c, tau_r)

    def rank_key(self, item: MemoryItem) -> float:
        return item.confidence * item.strength

    # events

    def on_admit(self, template: MemoryItem) -> None:
        self.register(template, Stage.TRANSIENT)
        if len(self.live_items(Stage.TRANSIENT)) > self.capacity.transient_cap:
            self.settle(Stage.TRANSIENT)

    def on_tick(self) -> None:
        self.counters["ticks"] += 1
        for stage in (Stage.TRANSIENT, Stage.WORKING, Stage.DURABLE):
            self.settle(stage, maintenance=True)

    def over_budget(self) -> bool:
        return self._budget_hit_this_step

    def load_capacity(self) -> int:
        return self.capacity.staged_total

    # settlement

    def settle(self, stage: Stage, maintenance: bool = False) -> None:
        cap = self.capacity.stage_cap(stage)
        if cap < 1:
            raise ControllerError("stage cap must be >= 1")
        nxt = NEXT_STAGE.get(stage)
        if nxt is not None:
            eligible = [i for i in self.live_items(stage) if self.gate(i, stage)]
            for item in sorted(eligible, key=lambda i: i.id):
                self.move(item, nxt, "promote")
            if len(self.live_items(nxt)) > self.capacity.stage_cap(nxt):
                self.settle(nxt)
        if maintenance and stage == Stage.WORKING:
            # a tick folds the residue and earlier working summaries into one note
            residue = self.live_items(stage)
            if sum(1 for i in residue if not i.is_summary) >= 1 and len(residue) >= 2:
                self.compress(sorted(residue, key=lambda i: i.id), stage)
        self.enforce_cap(stage, cap)

    def enforce_cap(self, stage: Stage, cap: int) -> None:
        members = self.live_items(stage)
        if len(members) > cap and stage == Stage.DURABLE:
            self._budget_hit_this_step = True
        while len(members) > cap:
            over = len(members) - cap
            ranked = sorted(members, key=lambda i: (self.rank_key(i), i.id))
            if stage not in self.compress_stages:
                for item in ranked[:over]:
                    self.evict(item)
            elif ranked[0].is_summary and not self.allow_nested_summaries:
                self.evict(ranked[0])
            else:
                group = [i for i in ranked
                         if self.allow_nested_summaries or not i.is_summary][:over + 1]
                if len(group) < 2:
                    self.evict(ranked[0])
                else:
                    self.compress(group, stage)
            members = self.live_items(stage)

    def compress(self, group: list[MemoryItem], stage: Stage) -> MemoryItem:
        if self.summary_fidelity is not None:
            for item in group:
                if item.strength >= self.summary_fidelity and not item.revised:
                    self._kept_through_summary.add(item.id)
        return self.make_summary(group, stage)

    def answerable(self, item_id: int) -> bool:
        if super().answerable(item_id):
            return True
        item = self.items.get(item_id)
        if item is None or item.stage != Stage.COMPRESSED or item_id not in self._kept_through_summary:
            return False
        # follow the summary chain; an evicted summary loses everything
        sid = item.summary_id
        while sid is not None:
            summary = self.items[sid]
            if summary.stage in LIVE_STAGES:
                return True
            if summary.stage != Stage.COMPRESSED:
                return False
            sid = summary.summary_id
        return False


def compress(items: list[MemoryItem], next_id: int = SUMMARY_ID_BASE) -> MemoryItem:
    """Standalone compression: mean confidence, max strength, constituents marked."""
    if len(items) < 2:
        raise ValueError("compression needs at least two items")
    stages = {i.stage for i in items}
    if len(stages) != 1:
        raise ValueError("compressed items must come from one stage")
    summary = MemoryItem(
        id=next_id,
        content_key=f"summary:{next_id}",
        confidence=sum(i.confidence for i in items) / len(items),
        strength=max(i.strength for i in items),
        stage=stages.pop(),
        constituents=tuple(i.id for i in items),
    )
    for i in items:
        i.stage = Stage.COMPRESSED
        i.summary_id = next_id
    return summary
