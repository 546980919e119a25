"""Seeded generators for the diagnostic regimes.

Every stream is a pure function of (regime, seed, options).  Randomness
comes from numpy's PCG64 bit generator seeded through a SeedSequence whose
entropy is ``[seed, stable_hash(regime), stable_hash(stream_tag)]``; the
hash is the first eight bytes of SHA-256, big-endian.  Ports that use the
same construction reproduce streams bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable

import numpy as np

from .core import (
    Admit,
    CapacityConfig,
    CueFeatures,
    Event,
    Evidence,
    Labels,
    MemoryItem,
    PressureTick,
    Query,
    QuerySpec,
    StreamError,
    clip01,
)

STRENGTH_SOURCES = ("oracle", "noisy", "coarse_cue", "generic_proxy", "cue_rule")
CAPACITY_SETTINGS = ("very_tight", "tight", "default", "roomy", "very_roomy")
HEAVY_CAPACITY = {"very_tight": 7, "tight": 10, "default": 13, "roomy": 18, "very_roomy": 22}
NOISY_HALF_WIDTH = 0.15


class ScenarioError(ValueError):
    pass


def stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def make_rng(regime: str, seed: int, tag: str = "stream") -> np.random.Generator:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, stable_hash(regime), stable_hash(tag)])
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------- stream type


@dataclass
class ScenarioStream:
    regime: str
    seed: int
    events: list[Event]
    capacity: CapacityConfig
    strength_source: str = "oracle"
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def queries(self) -> list[QuerySpec]:
        return [e.spec for e in self.events if isinstance(e, Query)]

    @property
    def final_query(self) -> QuerySpec:
        finals = [q for q in self.queries if q.final]
        if len(finals) != 1:
            raise StreamError(f"expected exactly one final query, found {len(finals)}")
        return finals[0]

    def items(self) -> dict[int, MemoryItem]:
        return {e.item.id: e.item for e in self.events if isinstance(e, Admit)}

    def label_counts(self) -> dict[str, int]:
        counts = {n: 0 for n in ("is_premise", "is_support", "is_false_premise",
                                 "is_local_distractor", "is_late_important")}
        for item in self.items().values():
            for role in item.labels.roles():
                counts[role] += 1
        return counts

    def to_lines(self, include_strength: bool = True) -> list[str]:
        header = {
            "kind": "stream",
            "regime": self.regime,
            "seed": self.seed,
            "capacity": [self.capacity.transient_cap, self.capacity.working_cap,
                         self.capacity.durable_cap, self.capacity.flat_cap,
                         self.capacity.soft_budget],
            "metadata": self.metadata,
        }
        if include_strength:
            header["strength_source"] = self.strength_source
        out = [json.dumps(header, sort_keys=True)]
        for ev in self.events:
            out.append(json.dumps(event_to_dict(ev, include_strength), sort_keys=True))
        return out

    def dumps(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    def admitted_sequence_hash(self) -> str:
        """Hash of the candidate sequence every policy receives."""
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    def structural_hash(self) -> str:
        """Hash of everything except the policy-visible strength channel."""
        body = "\n".join(self.to_lines(include_strength=False))
        return hashlib.sha256(body.encode()).hexdigest()


def _r(x: float) -> float:
    return round(float(x), 6)


def event_to_dict(ev: Event, include_strength: bool = True) -> dict[str, Any]:
    if isinstance(ev, Admit):
        it = ev.item
        cues = {
            "c_hat": _r(it.cues.evidence_confidence),
            "shock": _r(it.cues.shock),
            "importance": _r(it.cues.importance_cue),
            "constraint": it.cues.constraint_language_cue,
            "qrel": _r(it.cues.query_relevance),
            "redundancy": _r(it.cues.redundancy),
        }
        if include_strength:
            cues["u"] = _r(it.cues.strength_signal)
        lab = it.labels
        return {"kind": "admit", "step": ev.step, "id": it.id, "key": it.content_key,
                "cues": cues, "roles": lab.roles(), "consequence": _r(lab.true_consequence),
                "probe": lab.probe}
    if isinstance(ev, Evidence):
        return {"kind": "evidence", "step": ev.step, "id": ev.item_id,
                "c_hat": _r(ev.confidence), "sign": ev.sign}
    if isinstance(ev, Query):
        q = ev.spec
        return {"kind": "query", "step": ev.step, "premise": sorted(q.required_premise_ids),
                "support": sorted(q.required_support_ids),
                "forbidden": sorted(q.forbidden_governing_ids), "final": q.final,
                "target": q.target_id}
    if isinstance(ev, PressureTick):
        return {"kind": "tick", "step": ev.step}
    raise StreamError(f"cannot serialize {type(ev).__name__}")


def event_from_dict(d: dict[str, Any]) -> Event:
    kind = d.get("kind")
    if kind == "admit":
        c = d["cues"]
        roles = set(d.get("roles", ()))
        labels = Labels(
            is_premise="is_premise" in roles,
            is_support="is_support" in roles,
            is_false_premise="is_false_premise" in roles,
            is_local_distractor="is_local_distractor" in roles,
            is_late_important="is_late_important" in roles,
            true_consequence=d.get("consequence", 0.0),
            probe=d.get("probe", ""),
        )
        cues = CueFeatures(
            evidence_confidence=c["c_hat"], shock=c["shock"], importance_cue=c["importance"],
            constraint_language_cue=bool(c["constraint"]), query_relevance=c["qrel"],
            redundancy=c["redundancy"], strength_signal=c.get("u", 0.0),
        )
        item = MemoryItem(id=d["id"], content_key=d["key"], created_step=d["step"],
                          last_touched_step=d["step"], labels=labels, cues=cues)
        return Admit(d["step"], item)
    if kind == "evidence":
        return Evidence(d["step"], d["id"], d["c_hat"], d["sign"])
    if kind == "query":
        return Query(d["step"], QuerySpec(
            frozenset(d["premise"]), frozenset(d["support"]), frozenset(d["forbidden"]),
            d["final"], d["target"]))
    if kind == "tick":
        return PressureTick(d["step"])
    raise StreamError(f"unknown event kind {kind!r}")


def loads(text: str) -> ScenarioStream:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise StreamError("empty stream text")
    head = json.loads(lines[0])
    if head.get("kind") != "stream":
        raise StreamError("first line must be the stream header")
    cap = CapacityConfig(*head["capacity"])
    events = [event_from_dict(json.loads(ln)) for ln in lines[1:]]
    return ScenarioStream(head["regime"], head["seed"], events, cap,
                          head.get("strength_source", "oracle"), head.get("metadata", {}))


# ---------------------------------------------------------------- builder


class StreamBuilder:
    """Appends events with strictly increasing steps and assigns item ids."""

    def __init__(self, regime: str, seed: int, source: str = "oracle",
                 confidence_scale: float = 1.0, shock_scale: float = 1.0):
        if source not in STRENGTH_SOURCES:
            raise ScenarioError(f"unknown strength source {source!r}; "
                                f"choose from {', '.join(STRENGTH_SOURCES)}")
        if confidence_scale < 0 or shock_scale < 0:
            raise ScenarioError("scales must be >= 0")
        self.regime = regime
        self.seed = seed
        self.source = source
        self.confidence_scale = confidence_scale
        self.shock_scale = shock_scale
        self.rng = make_rng(regime, seed)
        # the noisy channel has its own stream so other fields never shift
        self.noise_rng = make_rng(regime, seed, "strength-noise")
        self.events: list[Event] = []
        self.step = 0
        self.next_id = 0

    def _tick_step(self) -> int:
        s = self.step
        self.step += 1
        return s

    def u(self, lo: float, hi: float) -> float:
        return float(self.rng.uniform(lo, hi))

    def strength_signal(self, consequence: float, importance: float, constraint: bool) -> float:
        noise = float(self.noise_rng.uniform(-NOISY_HALF_WIDTH, NOISY_HALF_WIDTH))
        if self.source == "oracle":
            return consequence
        if self.source == "noisy":
            return clip01(consequence + noise)
        if self.source == "coarse_cue":
            return 0.9 if consequence >= 2 / 3 else 0.5 if consequence >= 1 / 3 else 0.1
        if self.source == "generic_proxy":
            return importance
        return 0.9 if constraint else 0.1

    def admit(self, key: str, *, c_hat: float, shock: float = 0.0, importance: float = 0.0,
              constraint: bool = False, qrel: float = 0.0, redundancy: float = 0.0,
              consequence: float = 0.0, role: str | None = None, probe: str = "") -> int:
        iid = self.next_id
        self.next_id += 1
        step = self._tick_step()
        labels = Labels(**({role: True} if role else {}), true_consequence=consequence,
                        probe=probe)
        cues = CueFeatures(
            evidence_confidence=clip01(c_hat * self.confidence_scale),
            shock=clip01(shock * self.shock_scale),
            importance_cue=clip01(importance),
            constraint_language_cue=constraint,
            query_relevance=clip01(qrel),
            redundancy=clip01(redundancy),
            strength_signal=self.strength_signal(consequence, importance, constraint),
        )
        item = MemoryItem(id=iid, content_key=f"{key}:{iid}", created_step=step,
                          last_touched_step=step, labels=labels, cues=cues)
        self.events.append(Admit(step, item))
        return iid

    def evidence(self, item_id: int, c_hat: float, sign: int = 1) -> None:
        self.events.append(Evidence(self._tick_step(), item_id,
                                    clip01(c_hat * self.confidence_scale), sign))

    def tick(self) -> None:
        self.events.append(PressureTick(self._tick_step()))

    def query(self, premise: Iterable[int] = (), support: Iterable[int] = (),
              forbidden: Iterable[int] = (), final: bool = False,
              target: int | None = None) -> None:
        self.events.append(Query(self._tick_step(), QuerySpec(
            frozenset(premise), frozenset(support), frozenset(forbidden), final, target)))

    def build(self, capacity: CapacityConfig, **metadata) -> ScenarioStream:
        meta = {"confidence_scale": self.confidence_scale, "shock_scale": self.shock_scale,
                **metadata}
        return ScenarioStream(self.regime, self.seed, list(self.events), capacity,
                              self.source, meta)


# ---------------------------------------------------------------- premise realization


def gen_premise_realization(seed: int, *, confidence_scale: float = 1.0,
                            shock_scale: float = 1.0, source: str = "oracle",
                            jitter: bool = True) -> ScenarioStream:
    """Early premise, three filler blocks each closed by a tick, late support."""
    b = StreamBuilder("premise_realization", seed, source, confidence_scale, shock_scale)
    j = (lambda lo, hi: b.u(lo, hi)) if jitter else (lambda lo, hi: (lo + hi) / 2)

    p = b.admit("premise", c_hat=0.95, shock=0.9, importance=0.9, constraint=True,
                qrel=0.9, consequence=1.0, role="is_premise")
    b.evidence(p, 0.95)

    def filler(mentioned: bool = False) -> int:
        if mentioned:
            f = b.admit("filler", c_hat=j(0.72, 0.8), shock=j(0.1, 0.2),
                        importance=j(0.6, 0.8), qrel=j(0.0, 0.4))
        else:
            f = b.admit("filler", c_hat=j(0.6, 0.9), shock=j(0.0, 0.2),
                        importance=j(0.4, 0.8), qrel=j(0.0, 0.4))
        if mentioned:
            b.evidence(f, j(0.75, 0.85))
        return f

    for _ in range(3):
        for k in range(7):
            filler(mentioned=k % 3 == 1)
        b.admit("detail", c_hat=j(0.92, 0.97), shock=0.0, importance=j(0.1, 0.3),
                qrel=j(0.0, 0.3), role="is_local_distractor")
        b.tick()
    s = b.admit("support", c_hat=0.9, shock=0.2, importance=0.5, qrel=0.9,
                consequence=0.07, role="is_support")
    for _ in range(2):
        b.admit("filler", c_hat=j(0.6, 0.9), shock=0.0, importance=j(0.4, 0.6),
                qrel=j(0.0, 0.4))
    b.admit("chatter", c_hat=j(0.3, 0.45), shock=0.0, importance=j(0.2, 0.4),
            qrel=j(0.0, 0.2))
    b.query(premise=[p], support=[s], final=True, target=p)
    n = b.next_id
    cap = CapacityConfig(transient_cap=2, working_cap=4, durable_cap=1,
                         flat_cap=n, soft_budget=(n + 1) // 2)
    return b.build(cap, premise=p, support=s)


# ---------------------------------------------------------------- heavy


@dataclass(frozen=True)
class HeavyLayout:
    """Per-capacity stream layout.

    ``tokens`` is read left to right after the anchor.  ``h``/``m``/``x`` admit
    a candidate of high/mid/low importance; upper case gives it a shock cue the
    staged controller can promote on, lower case leaves it stuck in transient.
    ``*`` admits the late-important item; every candidate after it is followed
    by weak evidence for that item.  ``|`` is a pressure tick.  ``!`` delivers
    the strong evidence for the late item and a touch of the anchor;
    candidates after ``!`` arrive with no evidence.
    """

    stage_caps: tuple[int, int, int]
    tokens: str
    soft_budget: int

    def __post_init__(self) -> None:
        if self.tokens.count("*") != 1 or self.tokens.count("!") != 1:
            raise ScenarioError("layout needs exactly one '*' and one '!'")
        if self.tokens.index("*") > self.tokens.index("!"):
            raise ScenarioError("'*' must come before '!'")
        bad = set(self.tokens) - set("hHmMxX*|!")
        if bad:
            raise ScenarioError(f"unknown layout tokens {sorted(bad)}")

    @property
    def candidates(self) -> int:
        return 1 + sum(1 for t in self.tokens if t.lower() in "hmx*")


HEAVY_LAYOUTS: dict[str, HeavyLayout] = {
    "very_tight": HeavyLayout((1, 1, 5), "M*mmm!m", 5),
    "tight": HeavyLayout((3, 1, 6), "MMXMHMHX*!", 9),
    "default": HeavyLayout((4, 5, 4), "*mHHmXHXMXMM!|", 10),
    "roomy": HeavyLayout((4, 6, 8), "|HxMmHXHx*xMHmMHX!|mMx", 15),
    "very_roomy": HeavyLayout((13, 4, 5), "X|mMmM|*mXMmHMMMxx|x!|M", 15),
}

IMPORTANCE_BAND = {"h": (0.75, 0.95), "m": (0.45, 0.65), "x": (0.1, 0.24)}
LATE_STRONG_EVIDENCE = 5


def gen_heavy(seed: int, capacity_setting: str = "default", *, source: str = "oracle",
              jitter: bool = True, layout: HeavyLayout | None = None) -> ScenarioStream:
    """Many plausible candidates; one becomes important only late."""
    if capacity_setting not in HEAVY_CAPACITY:
        raise ScenarioError(f"unknown capacity setting {capacity_setting!r}; "
                            f"choose from {', '.join(CAPACITY_SETTINGS)}")
    lay = layout or HEAVY_LAYOUTS[capacity_setting]
    cap_total = HEAVY_CAPACITY[capacity_setting]
    if sum(lay.stage_caps) != cap_total:
        raise ScenarioError("stage caps must add up to the capacity setting")
    b = StreamBuilder("heavy", seed, source)
    j = (lambda lo, hi: b.u(lo, hi)) if jitter else (lambda lo, hi: (lo + hi) / 2)

    anchor = b.admit("anchor", c_hat=0.8, shock=0.3, importance=0.95, qrel=0.3,
                     redundancy=0.50, consequence=0.3)
    late = None
    closed = False
    for tok in lay.tokens:
        if tok == "|":
            b.tick()
        elif tok == "*":
            late = b.admit("late", c_hat=0.7, shock=0.2, importance=0.2, qrel=0.95,
                           redundancy=0.83, consequence=1.0, role="is_late_important")
        elif tok == "!":
            for _ in range(LATE_STRONG_EVIDENCE):
                b.evidence(late, 0.98)
            b.evidence(anchor, 0.4)
            closed = True
        else:
            lo, hi = IMPORTANCE_BAND[tok.lower()]
            b.admit("candidate", c_hat=j(0.7, 0.85), shock=1.0 if tok.isupper() else 0.0,
                    importance=j(lo, hi), qrel=j(0.0, 0.3), redundancy=j(0.832, 0.838))
            if late is not None and not closed:
                b.evidence(late, 0.5)
    b.query(support=[late], final=True, target=late)
    cap = CapacityConfig(*lay.stage_caps, flat_cap=cap_total, soft_budget=lay.soft_budget)
    return b.build(cap, late=late, anchor=anchor, capacity_setting=capacity_setting)


# ---------------------------------------------------------------- gate / strength


def gen_gate_strength(seed: int, *, source: str = "oracle", jitter: bool = True) -> ScenarioStream:
    """Valid premise, support, high-confidence locals and two cue-heavy false premises."""
    b = StreamBuilder("gate_strength", seed, source)
    j = (lambda lo, hi: b.u(lo, hi)) if jitter else (lambda lo, hi: (lo + hi) / 2)

    p = b.admit("premise", c_hat=0.95, shock=0.8, importance=0.8, constraint=True,
                qrel=0.9, consequence=1.0, role="is_premise")
    b.evidence(p, 0.95)
    fps = []
    for _ in range(2):
        fp = b.admit("false_premise", c_hat=j(0.2, 0.3), shock=0.9, importance=j(0.9, 1.0),
                     constraint=True, qrel=0.8, role="is_false_premise")
        fps.append(fp)
        b.evidence(p, 0.3, sign=-1)
    for _ in range(6):
        b.admit("local", c_hat=j(0.93, 1.0), shock=0.0, importance=j(0.2, 0.4),
                qrel=j(0.3, 0.6), role="is_local_distractor")
    s = b.admit("support", c_hat=0.9, shock=0.4, importance=0.5, qrel=0.9,
                consequence=0.07, role="is_support")
    for _ in range(2):
        b.admit("local", c_hat=j(0.93, 1.0), shock=0.0, importance=j(0.2, 0.4),
                qrel=j(0.3, 0.6), role="is_local_distractor")
    b.tick()
    b.query(premise=[p], support=[s], forbidden=fps, final=True, target=p)
    cap = CapacityConfig(transient_cap=4, working_cap=2, durable_cap=3, flat_cap=6,
                         soft_budget=6)
    return b.build(cap, premise=p, support=s)


# ---------------------------------------------------------------- quadrant


def gen_quadrant(seed: int, *, source: str = "oracle", jitter: bool = True) -> ScenarioStream:
    """Four probes spanning confidence x strength, seven locals, two fillers."""
    b = StreamBuilder("quadrant", seed, source)
    j = (lambda lo, hi: b.u(lo, hi)) if jitter else (lambda lo, hi: (lo + hi) / 2)

    def local(crisp: bool):
        c_hat = j(0.92, 1.0) if crisp else j(0.87, 0.905)
        b.admit("local", c_hat=c_hat, shock=0.0, importance=j(0.3, 0.45),
                qrel=j(0.3, 0.6), role="is_local_distractor")

    hchs = b.admit("probe", c_hat=0.9, shock=0.5, importance=0.9, constraint=True, qrel=0.9,
                   consequence=1.0, probe="HcHs")
    for _ in range(2):
        b.admit("filler", c_hat=j(0.95, 1.0), shock=0.0, importance=j(0.0, 0.1),
                qrel=j(0.0, 0.2))
    mchs = b.admit("probe", c_hat=0.6, shock=0.5, importance=0.85, constraint=True, qrel=0.8,
                   consequence=1.0, probe="McHs")
    hcls = b.admit("probe", c_hat=0.9, shock=0.0, importance=0.25, qrel=0.5, probe="HcLs")
    lcls = b.admit("probe", c_hat=0.2, shock=0.0, importance=0.2, qrel=0.3, probe="LcLs")
    for k in range(7):
        local(crisp=k % 2 == 0)
    b.tick()
    b.query(premise=[hchs], support=[mchs], forbidden=[hcls, lcls], final=True, target=hchs)
    cap = CapacityConfig(transient_cap=5, working_cap=2, durable_cap=1, flat_cap=7,
                         soft_budget=7)
    return b.build(cap, probes={"HcHs": hchs, "McHs": mchs, "HcLs": hcls, "LcLs": lcls})


# ---------------------------------------------------------------- implicit heuristics


def gen_implicit(seed: int, *, source: str = "oracle", jitter: bool = True,
                 regime: str = "implicit") -> ScenarioStream:
    """Old sparse premise, frequent support, six recent locals, four false premises."""
    b = StreamBuilder(regime, seed, source)
    j = (lambda lo, hi: b.u(lo, hi)) if jitter else (lambda lo, hi: (lo + hi) / 2)

    # the premise is touched once, at admission
    p = b.admit("premise", c_hat=0.95, shock=0.8, importance=0.85, constraint=True,
                qrel=0.2, consequence=1.0, role="is_premise")
    fps = [b.admit("false_premise", c_hat=j(0.2, 0.3), shock=0.8, importance=j(0.9, 1.0),
                   constraint=True, qrel=j(0.2, 0.4), role="is_false_premise")
           for _ in range(3)]
    s = b.admit("support", c_hat=0.85, shock=0.0, importance=0.45, qrel=0.95,
                consequence=0.9, role="is_support")
    for _ in range(4):
        b.evidence(s, 0.5)
    for _ in range(6):
        loc = b.admit("local", c_hat=j(0.9, 0.99), shock=0.0, importance=j(0.2, 0.4),
                      qrel=j(0.5, 0.8), role="is_local_distractor")
        b.evidence(loc, 0.5)
    fps.append(b.admit("false_premise", c_hat=j(0.2, 0.3), shock=0.8, importance=j(0.9, 1.0),
                       constraint=True, qrel=j(0.2, 0.4), role="is_false_premise"))
    b.tick()
    b.query(premise=[p], support=[s], forbidden=fps, final=True, target=p)
    cap = CapacityConfig(transient_cap=5, working_cap=1, durable_cap=2, flat_cap=7,
                         soft_budget=7)
    return b.build(cap, premise=p, support=s)


def gen_strength_source(seed: int, source: str = "oracle", *, jitter: bool = True) -> ScenarioStream:
    """Implicit-regime recipe with a chosen policy-visible strength channel."""
    if source not in STRENGTH_SOURCES:
        raise ScenarioError(f"unknown strength source {source!r}; "
                            f"choose from {', '.join(STRENGTH_SOURCES)}")
    return gen_implicit(seed, source=source, jitter=jitter, regime="strength_source")


# ---------------------------------------------------------------- compression cycle


def gen_compression_cycle(seed: int, *, cycles: int = 5, budget: int = 16,
                          details_per_cycle: int = 14, instructions_per_cycle: int = 3,
                          retouch: float = 0.5, retouch_rounds: int = 3,
                          premise_mentions: tuple[int, int] = (2, 5), source: str = "oracle",
                          jitter: bool = True) -> ScenarioStream:
    """Repeated budgeted re-summarization; the premise must survive every cycle.

    Each cycle brings more candidates than the summary budget, so every
    tick forces a lossy choice.  Old details are re-mentioned at random,
    which slowly lifts their touch counts past the premise's.
    """
    if cycles < 4:
        raise ScenarioError("the compression-cycle regime needs at least four cycles")
    if details_per_cycle + instructions_per_cycle <= budget:
        raise ScenarioError("each cycle must overflow the summary budget")
    b = StreamBuilder("compression_cycle", seed, source)
    j = (lambda lo, hi: b.u(lo, hi)) if jitter else (lambda lo, hi: (lo + hi) / 2)

    p = b.admit("premise", c_hat=0.85, shock=0.9, importance=0.9, constraint=True,
                qrel=0.9, consequence=1.0, role="is_premise")
    lo, hi = premise_mentions
    for _ in range(int(b.rng.integers(lo, hi + 1)) if jitter else (lo + hi) // 2):
        b.evidence(p, 0.6)
    supports: list[int] = []
    details: list[int] = []
    for cyc in range(cycles):
        if cyc >= cycles - 2:
            for _ in range(2):
                supports.append(b.admit("support", c_hat=0.85, shock=0.9, importance=0.8,
                                        qrel=0.9, consequence=0.07, role="is_support"))
                b.evidence(supports[-1], 0.9)
        for _ in range(details_per_cycle):
            details.append(b.admit("detail", c_hat=j(0.92, 0.99), shock=j(0.0, 0.2),
                                   importance=j(0.2, 0.5), qrel=j(0.0, 0.4)))
        for _ in range(instructions_per_cycle):
            b.admit("instruction", c_hat=j(0.93, 0.99), shock=0.0, importance=j(0.3, 0.5),
                    qrel=j(0.2, 0.5), role="is_local_distractor")
        for _ in range(retouch_rounds):
            for d in details:
                if b.rng.random() < retouch:
                    b.evidence(d, j(0.5, 0.8))
        b.tick()
    b.query(premise=[p], support=supports, final=True, target=p)
    cap = CapacityConfig(transient_cap=budget, working_cap=1, durable_cap=budget,
                         flat_cap=budget, soft_budget=budget)
    return b.build(cap, premise=p, support=supports, cycles=cycles, budget=budget)


# ---------------------------------------------------------------- registry


GENERATORS: dict[str, Callable[..., ScenarioStream]] = {
    "premise_realization": gen_premise_realization,
    "heavy": gen_heavy,
    "gate_strength": gen_gate_strength,
    "quadrant": gen_quadrant,
    "implicit": gen_implicit,
    "strength_source": gen_strength_source,
    "compression_cycle": gen_compression_cycle,
}


def regime_names() -> list[str]:
    return list(GENERATORS)


def generate(regime: str, seed: int, **options) -> ScenarioStream:
    try:
        gen = GENERATORS[regime]
    except KeyError:
        raise ScenarioError(f"unknown regime {regime!r}; "
                            f"choose from {', '.join(GENERATORS)}") from None
    return gen(seed, **options)


def sweep_front_door(taus: Iterable[float], seed: int = 0, episodes: int = 1,
                     capacity_setting: str = "default"):
    """Run the front-door controller over a threshold grid on the heavy regime.

    Returns ``(rows, pareto)`` where rows are ``(tau, imp_ret, final_load)``
    means and pareto is the sorted set of distinct operating points.
    """
    from .metrics import compute_metrics
    from .policies import make_policy, run_policy

    taus = list(taus)
    if not taus:
        raise ScenarioError("empty tau list")
    streams = [gen_heavy(seed + k, capacity_setting) for k in range(episodes)]
    rows = []
    for tau in taus:
        imp = load = 0.0
        for st in streams:
            ctl = make_policy("front_door", st.capacity, overrides={"tau": tau})
            rep = compute_metrics(run_policy(ctl, st), st)
            imp += rep["ImpRet"]
            load += rep["FinalLoad"]
        rows.append((tau, round(imp / len(streams), 4), round(load / len(streams), 4)))
    pareto = sorted({(load, imp) for _, imp, load in rows})
    return rows, pareto
