import random

import pytest

import oracles
from memlife.core import (
    Admit, CapacityConfig, CueFeatures, Evidence, MemoryItem, PressureTick, Query, QuerySpec,
    Stage,
)
from memlife.policies import make_policy, policy_names, run_policy
from memlife.scenarios import ScenarioStream, generate, regime_names
from memlife.stagemem import (
    ControllerError, ReadoutResult, StageMemController, StageThresholds, compress,
    promote_eligible,
)


def _norm(summaries):
    return sorted((tuple(sorted(g)), s, round(c, 12), round(m, 12)) for g, s, c, m in summaries)


def test_settle_matches_exhaustive_oracle():
    rng = random.Random(2024)
    for case in range(600):
        cells, start, caps, thr = oracles.random_settle_case(rng)
        want_stage, want_sum = oracles.brute_settle(cells, start, caps, thr)
        got_stage, got_sum, _ = oracles.controller_settle(cells, start, caps, thr)
        assert got_stage == want_stage, (case, cells, start, caps, thr)
        assert _norm(got_sum) == _norm(want_sum), (case, cells)


def test_settle_respects_caps():
    rng = random.Random(5)
    for _ in range(300):
        cells, start, caps, thr = oracles.random_settle_case(rng)
        _, _, ctl = oracles.controller_settle(cells, start, caps, thr)
        for stage in oracles.ORDER:
            assert len(ctl.live_items(stage)) <= caps.stage_cap(stage)


@pytest.mark.parametrize("regime", regime_names())
def test_transition_audit(regime):
    for policy in policy_names():
        for seed in range(3):
            stream = generate(regime, seed)
            trace = run_policy(make_policy(policy, stream.capacity), stream)
            assert oracles.audit_transitions(trace) == [], (regime, policy, seed)
            replayed = oracles.replay_stages(trace)
            final = {i: it.stage.value for i, it in trace.final_items.items()}
            assert replayed == final


def test_promotion_needs_both_gates():
    thr = StageThresholds()
    high_c = MemoryItem(0, "a", confidence=0.95, strength=0.05)
    high_m = MemoryItem(1, "b", confidence=0.3, strength=0.5)
    both = MemoryItem(2, "c", confidence=0.6, strength=0.1)
    tc, tr = thr.for_boundary(Stage.TRANSIENT)
    assert not promote_eligible(high_c, tc, tr)
    assert not promote_eligible(high_m, tc, tr)
    assert promote_eligible(both, tc, tr)
    tc, tr = thr.for_boundary(Stage.WORKING)
    assert not promote_eligible(both, tc, tr)
    with pytest.raises(ValueError):
        thr.for_boundary(Stage.DURABLE)


def test_threshold_ordering_enforced():
    with pytest.raises(ValueError):
        StageThresholds(tau_c_working=0.9, tau_c_durable=0.5)


def test_compress_example():
    a = MemoryItem(0, "a", confidence=0.4, strength=0.1, stage=Stage.WORKING)
    b = MemoryItem(1, "b", confidence=0.8, strength=0.3, stage=Stage.WORKING)
    s = compress([a, b])
    assert s.confidence == pytest.approx(0.6) and s.strength == pytest.approx(0.3)
    assert s.stage == Stage.WORKING and s.constituents == (0, 1)
    assert a.stage == b.stage == Stage.COMPRESSED and a.summary_id == s.id


def test_compress_rejects_single_item_and_mixed_stages():
    with pytest.raises(ValueError):
        compress([MemoryItem(0, "a")])
    with pytest.raises(ValueError):
        compress([MemoryItem(0, "a"), MemoryItem(1, "b", stage=Stage.WORKING)])


def test_readout_on_empty_store():
    ctl = StageMemController(CapacityConfig())
    assert ctl.readout(QuerySpec(frozenset({1}), frozenset({2}), final=True)) == ReadoutResult()
    assert ctl.probe_rank(3) is None


def _item(i, c_hat=0.5):
    return MemoryItem(i, f"k:{i}", cues=CueFeatures(evidence_confidence=c_hat, shock=0.5))


def test_supported_item_reaches_durable():
    ctl = StageMemController(CapacityConfig(transient_cap=1, working_cap=1, durable_cap=2))
    events = [Admit(0, _item(0, 0.9))]
    events += [Evidence(k, 0, 0.95) for k in range(1, 30)]
    events += [Admit(30, _item(1)), Admit(31, _item(2)), PressureTick(32), PressureTick(33)]
    ctl.run(events)
    assert ctl.items[0].stage == Stage.DURABLE


def test_transient_overflow_evicts_weakest():
    ctl = StageMemController(CapacityConfig(transient_cap=2, working_cap=1, durable_cap=1))
    ctl.run([Admit(0, _item(0, 0.3)), Admit(1, _item(1, 0.2)), Admit(2, _item(2, 0.1))])
    stages = {i: it.stage for i, it in ctl.items.items()}
    assert list(stages.values()).count(Stage.EVICTED) == 1
    assert len(ctl.live_items(Stage.TRANSIENT)) == 2


def test_duplicate_admit_is_an_error():
    ctl = StageMemController(CapacityConfig())
    with pytest.raises(ControllerError):
        ctl.run([Admit(0, _item(0)), Admit(1, _item(0))])


def test_evidence_for_absent_item_is_ignored():
    # stream validation reports dangling ids; controllers treat them like evicted items
    ctl = StageMemController(CapacityConfig())
    ctl.run([Evidence(0, 9, 0.5)])
    assert ctl.items == {} and ctl.trace == []


def test_conflict_marks_revision_and_blocks_promotion():
    ctl = StageMemController(CapacityConfig())
    ctl.run([Admit(0, _item(0, 0.9)), Evidence(1, 0, 0.99, sign=-1)])
    it = ctl.items[0]
    assert it.revised and it.confidence == 0.99
    assert not ctl.gate(it, Stage.TRANSIENT)
    assert not ctl.answerable(0)


def test_weak_conflict_is_an_ordinary_update():
    ctl = StageMemController(CapacityConfig())
    ctl.run([Admit(0, _item(0, 0.9)), Evidence(1, 0, 0.5, sign=-1)])
    it = ctl.items[0]
    assert not it.revised and it.confidence < 0.9


def test_query_is_logged():
    ctl = StageMemController(CapacityConfig())
    ctl.run([Admit(0, _item(0)), Query(1, QuerySpec(frozenset({0}), final=True))])
    log = ctl.final_readout()
    assert log is not None and log.readout.prem_ok and log.answerable == frozenset({0})


def test_stream_roundtrip_through_controller():
    stream = generate("premise_realization", 3)
    clone = ScenarioStream(stream.regime, stream.seed, list(stream.events), stream.capacity)
    a = run_policy(make_policy("stagemem", stream.capacity), stream)
    b = run_policy(make_policy("stagemem", clone.capacity), clone)
    assert [r.line() for r in a.records] == [r.line() for r in b.records]


class _Bumped(StageMemController):
    """StageMem with extra initial strength for one item."""

    def __init__(self, *a, target=None, delta=0.1, **kw):
        super().__init__(*a, **kw)
        self.target, self.delta = target, delta

    def initial_strength(self, item):
        m = super().initial_strength(item)
        return min(1.0, m + self.delta) if item.id == self.target else m


def _max_depth(trace, target):
    depth = {"transient": 0, "working": 1, "durable": 2}
    return max((depth[r.to_stage] for r in trace.records
                if r.item_id == target and r.to_stage in depth), default=-1)


@pytest.mark.xfail(strict=True, reason="higher strength lowers plasticity, so a stronger "
                   "item can miss the durable confidence gate; see the decisions ledger")
def test_monotone_protection():
    violations = []
    for regime in regime_names():
        for seed in range(10):
            stream = generate(regime, seed)
            for target in sorted(stream.items())[:6]:
                base = run_policy(_Bumped(stream.capacity, target=None), stream)
                bump = run_policy(_Bumped(stream.capacity, target=target), stream)
                if _max_depth(bump, target) < _max_depth(base, target):
                    violations.append((regime, seed, target))
    assert not violations, violations
