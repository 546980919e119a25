"""Acceptance suite: one pass/fail line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from memlife import harness  # noqa: E402
from memlife.core import Stage  # noqa: E402
from memlife.dynamics import DynamicsParams, UpdateRule  # noqa: E402
from memlife.metrics import compute_metrics  # noqa: E402
from memlife.policies import make_policy, policy_names, run_policy  # noqa: E402
from memlife.scenarios import generate, regime_names  # noqa: E402

EPISODES = harness.DEFAULT_EPISODES
TOL = harness.EXACT_TOL


# ---------------------------------------------------------------- shared runs


def full_config() -> harness.RunConfig:
    return harness.RunConfig(tables=list(harness.TABLES), episodes=EPISODES)


@functools.lru_cache(maxsize=None)
def matrix_results() -> tuple:
    return tuple(harness.run_matrix(full_config(), write=False).results)


@functools.lru_cache(maxsize=None)
def matrix() -> dict[str, object]:
    return {r.spec.path: r.agg for r in matrix_results()}


@functools.lru_cache(maxsize=None)
def front_door_sweep() -> harness.SweepOutcome:
    return harness.run_sweep("front_door", harness.RunConfig(episodes=EPISODES))


@functools.lru_cache(maxsize=None)
def golden() -> list[harness.GoldenRow]:
    return harness.load_golden()


class Checker:
    def __init__(self):
        self.failures: list[str] = []
        self.count = 0

    def fail(self, msg: str) -> None:
        self.failures.append(msg)

    def exact(self, cell: str, metric: str, want: float) -> None:
        """Mean, minimum and maximum all equal ``want``: every episode agrees."""
        self.count += 1
        agg = matrix().get(cell)
        if agg is None or metric not in agg.mean:
            self.fail(f"{cell} {metric} missing")
            return
        got = (agg.mean[metric], agg.minimum[metric], agg.maximum[metric])
        if any(abs(x - want) > TOL for x in got):
            self.fail(f"{cell} {metric} mean/min/max {got[0]:.4f}/{got[1]:.4f}/{got[2]:.4f} "
                      f"want {want:.4f}")

    def row(self, row: harness.GoldenRow) -> None:
        if row.op == "==":
            self.exact(row.cell, row.metric, row.args[0])
            return
        self.count += 1
        agg = matrix().get(row.cell)
        if agg is None or row.metric not in agg.mean:
            self.fail(f"{row.cell} {row.metric} missing")
        elif not row.holds(agg.mean[row.metric]):
            self.fail(f"{row.cell} {row.metric} got {agg.mean[row.metric]:.4f} "
                      f"want {row.describe()}")

    def rows(self, pred) -> None:
        for r in golden():
            if pred(r.cell):
                self.row(r)

    def mean(self, cell: str, metric: str) -> float:
        return matrix()[cell].mean[metric]

    def result(self) -> tuple[bool, str]:
        if self.failures:
            extra = f" (+{len(self.failures) - 3} more)" if len(self.failures) > 3 else ""
            return False, "; ".join(self.failures[:3]) + extra
        return True, f"{self.count} checks"


# ---------------------------------------------------------------- criteria


def criterion_1():
    ck = Checker()
    ck.rows(lambda c: c.startswith("premise_realization/"))
    ck.exact("premise_realization/single_layer", "FinalLoad", 1.0)
    ck.exact("premise_realization/stagemem", "BudgetHit", 0.0)
    loads = {p: ck.mean(f"premise_realization/{p}", "FinalLoad")
             for p in ("single_state", "stagemem", "confidence_only", "single_layer")}
    vals = list(loads.values())
    ck.count += 1
    if not all(a < b for a, b in zip(vals, vals[1:])):
        ck.fail("load ordering broken: " + ", ".join(f"{k}={v:.4f}" for k, v in loads.items()))
    return ck.result()


def criterion_2():
    ck = Checker()
    ck.rows(lambda c: c.startswith("heavy["))
    ck.exact("heavy[capacity_setting=default]/stagemem", "FinalLoad", 4 / 13)
    ck.exact("heavy[capacity_setting=default]/front_door", "FinalLoad", 1 / 13)
    for s in harness.CAPACITY_SETTINGS:
        ck.count += 1
        sm = ck.mean(f"heavy[capacity_setting={s}]/stagemem", "FinalLoad")
        sl = ck.mean(f"heavy[capacity_setting={s}]/single_layer", "FinalLoad")
        if not sm < sl:
            ck.fail(f"{s}: stagemem load {sm:.4f} not below single_layer {sl:.4f}")
    return ck.result()


def criterion_3():
    ck = Checker()
    sw = front_door_sweep()
    rows = [line.split(",") for line in sw.csv.strip().splitlines()[1:]]
    curve = [(float(t), float(imp)) for t, _, imp, _ in rows]
    ck.count += 1
    jumps = [(a[0], b[0]) for a, b in zip(curve, curve[1:]) if a[1] != b[1]]
    if len(jumps) != 1 or not all(v in (0.0, 1.0) for _, v in curve):
        ck.fail(f"ImpRet is not a single 0/1 step: jumps {jumps}")
    else:
        lo, hi = jumps[0]
        if not (0.82 <= lo and hi <= 0.84 + 1e-9) or curve[0][1] != 0.0:
            ck.fail(f"step between {lo:.2f} and {hi:.2f}, want inside (0.82, 0.84)")
    ck.count += 1
    want = {(0.0, 0.0), (round(1 / 13, 4), 0.0), (1.0, 1.0)}
    if set(sw.extra["pareto"]) != want:
        ck.fail(f"operating points {sw.extra['pareto']}")
    ck.count += 1
    sm = sw.extra["stagemem"]
    if sm != (round(4 / 13, 4), 1.0):
        ck.fail(f"stagemem point {sm}")
    same_recall = [p for p in sw.extra["pareto"] if p[1] >= sm[1]]
    if not same_recall or not all(harness.dominates(sm, p) for p in same_recall):
        ck.fail("stagemem does not dominate the front-door points at full recall")
    if any(harness.dominates(p, sm) for p in sw.extra["pareto"]):
        ck.fail("a front-door point dominates stagemem")
    return ck.result()


def criterion_4():
    ck = Checker()
    ck.rows(lambda c: c.startswith("gate_strength/"))
    ck.exact("gate_strength/strength_only", "FalsePrem", 2.0)
    for m, v in (("Prem", 1.0), ("Supp", 1.0), ("Behav", 1.0), ("FalsePrem", 0.0)):
        ck.exact("gate_strength/stagemem", m, v)
    return ck.result()


def criterion_5():
    ck = Checker()
    ck.rows(lambda c: c.startswith("quadrant/"))
    return ck.result()


def criterion_6():
    ck = Checker()
    ck.rows(lambda c: c.startswith("implicit/"))
    return ck.result()


def criterion_7():
    ck = Checker()
    ck.rows(lambda c: c.startswith("strength_source["))
    return ck.result()


def criterion_8():
    ck = Checker()
    ck.rows(lambda c: c.startswith("compression_cycle/"))
    for p in ("confidence_only_summary", "recency_summary"):
        ck.count += 1
        agg = matrix()[f"compression_cycle/{p}"]
        if agg.never_lost:
            ck.fail(f"{p}: {agg.never_lost} episodes never lost the premise")
    return ck.result()


def criterion_9():
    ck = Checker()
    ck.rows(lambda c: c.startswith("premise_realization["))
    return ck.result()


def criterion_10():
    ck = Checker()
    # dynamics: range, monotonicity, saturation over 10^5 draws
    rng = random.Random(10)
    rule = UpdateRule(DynamicsParams())
    for _ in range(100_000):
        ck.count += 1
        c, m, ch, sh = rng.random(), rng.random(), rng.random(), rng.random()
        stage = rng.choice((Stage.TRANSIENT, Stage.WORKING, Stage.DURABLE))
        c1, m1, p = rule.apply(c, m, ch, 1, sh, stage)
        c2, m2, _ = rule.apply(c, m, ch, -1, sh, stage)
        if not (0 <= c1 <= 1 and 0 <= m1 <= 1 and 0 < p <= 1 and 0 <= c2 <= 1):
            ck.fail(f"range at c={c} m={m}")
        if not (c1 >= c and m1 >= m and c2 <= c and m2 == m):
            ck.fail(f"monotonicity at c={c} m={m}")
        if len(ck.failures) > 5:
            break
    c = m = 0.0
    for _ in range(10_000):
        c, m, _ = rule.apply(c, m, 0.95, 1, 1.0, Stage.TRANSIENT)
    if not (c > 1 - 1e-6 and m <= 1.0):
        ck.fail(f"no saturation: c={c} m={m}")
    # settle vs exhaustive oracle
    rng = random.Random(11)
    for _ in range(500):
        ck.count += 1
        cells, start, caps, thr = oracles.random_settle_case(rng)
        want_stage, want_sum = oracles.brute_settle(cells, start, caps, thr)
        got_stage, got_sum, _ = oracles.controller_settle(cells, start, caps, thr)
        if want_stage != got_stage or _norm(want_sum) != _norm(got_sum):
            ck.fail(f"settle mismatch on {cells}")
    # metrics vs independent recomputation
    traces = 0
    for regime in regime_names():
        for policy in policy_names():
            for seed in range(2):
                stream = generate(regime, seed)
                trace = run_policy(make_policy(policy, stream.capacity), stream)
                got = compute_metrics(trace, stream).values
                want = oracles.recompute_metrics(trace, stream)
                traces += 1
                ck.count += 1
                for k, v in want.items():
                    if k in got and abs(got[k] - v) > 1e-9:
                        ck.fail(f"{regime}/{policy}/{seed} {k}: {got[k]} vs {v}")
    if traces < 200:
        ck.fail(f"only {traces} traces")
    # byte-identical rerun of the full matrix
    ck.count += 1
    first = list(matrix_results())
    second = harness.run_matrix(full_config(), write=False).results
    if (harness.render_csv(first) != harness.render_csv(second)
            or harness.render_markdown(first) != harness.render_markdown(second)
            or [r.stream_hash for r in first] != [r.stream_hash for r in second]):
        ck.fail("matrix rerun is not byte-identical")
    return ck.result()


def _norm(summaries):
    return sorted((tuple(sorted(g)), s.value, round(c, 12), round(m, 12))
                  for g, s, c, m in summaries)


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 11)}


def line(n: int) -> tuple[bool, str]:
    try:
        ok, detail = CRITERIA[n]()
    except Exception as exc:  # report, do not hide
        ok, detail = False, f"error: {exc!r}"
    return ok, f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    from conftest import ACCEPTANCE_LINES
    ok, text = line(n)
    ACCEPTANCE_LINES[n] = text
    print(text)
    assert ok, text


if __name__ == "__main__":
    results = [line(n) for n in sorted(CRITERIA)]
    for _, text in results:
        print(text)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
