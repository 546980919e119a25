"""Named metrics per episode, seed aggregation, CSV and markdown output."""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .core import LIVE_STAGES, PROTECTED_STAGES, MemoryItem, Stage

METRIC_ORDER = (
    "Adm", "Prem", "Supp", "Behav", "CritLoss", "FinalLoad", "NonCrit", "BudgetHit",
    "FalsePrem", "Residue", "LocalProt", "HcHs", "McHs", "HcLs", "LcLs", "GoodProt",
    "BadProt", "ProtLoad", "Load", "Recall", "ImpRet", "Regret", "Useful", "WriteAmp",
    "Hit@1", "MRR", "Details", "LossCycle",
)

# metrics bounded by 1 (everything else is a count or a ratio that may exceed 1)
RATE_METRICS = frozenset({
    "Adm", "Prem", "Supp", "Behav", "CritLoss", "FinalLoad", "NonCrit", "BudgetHit",
    "HcHs", "McHs", "HcLs", "LcLs", "GoodProt", "BadProt", "Recall", "ImpRet", "Regret",
    "Useful", "Hit@1", "MRR",
})

REGIME_METRICS: dict[str, tuple[str, ...]] = {
    "premise_realization": ("Adm", "Prem", "Supp", "Behav", "CritLoss", "FinalLoad",
                            "NonCrit", "BudgetHit"),
    "heavy": ("Recall", "ImpRet", "FinalLoad", "NonCrit", "BudgetHit", "Regret", "Useful",
              "WriteAmp", "Hit@1", "MRR"),
    "gate_strength": ("Adm", "Prem", "Supp", "Behav", "CritLoss", "FalsePrem"),
    "quadrant": ("HcHs", "McHs", "HcLs", "LcLs", "GoodProt", "BadProt", "LocalProt",
                 "ProtLoad", "Load"),
    "implicit": ("Prem", "Supp", "Behav", "FalsePrem", "Residue"),
    "strength_source": ("Prem", "Supp", "Behav", "FalsePrem", "Residue", "ProtLoad", "Load"),
    "compression_cycle": ("Prem", "Supp", "Behav", "Residue", "Details", "LossCycle"),
}

QUERY_RELEVANT = 0.5


class MetricsError(ValueError):
    pass


@dataclass
class MetricsReport:
    regime: str
    policy: str
    values: dict[str, float]

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def get(self, name: str, default=None):
        return self.values.get(name, default)


def _is_critical(item: MemoryItem) -> bool:
    lab = item.labels
    return lab.is_premise or lab.is_support or lab.is_late_important or lab.true_consequence > 0


def _first_with(stream_items: Mapping[int, MemoryItem], flag: str) -> list[int]:
    return sorted(i for i, it in stream_items.items() if getattr(it.labels, flag))


def compute_metrics(trace, stream) -> MetricsReport:
    """Full metric vector for one episode; only the regime's metrics are kept."""
    final = trace.final
    if final is None:
        raise MetricsError("trace has no final readout")
    items = trace.final_items
    templates = stream.items()
    live = [it for it in items.values() if it.stage in LIVE_STAGES]
    protected = [it for it in items.values() if it.stage in PROTECTED_STAGES]
    readout = final.readout
    v: dict[str, float] = {}

    premises = _first_with(templates, "is_premise")
    supports = _first_with(templates, "is_support")
    rejected = {r.item_id for r in trace.records if r.action in ("reject", "drop", "merge")}
    adm = bool(premises) and all(p in items and p not in rejected for p in premises)
    v["Adm"] = float(adm)
    v["Prem"] = float(readout.prem_ok)
    v["Supp"] = float(readout.supp_ok)
    if stream.regime == "compression_cycle":
        kept = sum(1 for s in supports if s in final.answerable)
        v["Supp"] = float(bool(supports) and kept * 2 >= len(supports))
    v["Behav"] = float(v["Prem"] and v["Supp"] and not readout.governed_by_false)
    v["CritLoss"] = float(adm and not readout.prem_ok)

    v["Load"] = float(len(live))
    v["FinalLoad"] = len(live) / trace.load_capacity if trace.load_capacity else 0.0
    noncrit = [it for it in live if it.is_summary or not _is_critical(it)]
    v["NonCrit"] = len(noncrit) / len(live) if live else 0.0
    v["BudgetHit"] = trace.over_budget_steps / trace.steps if trace.steps else 0.0

    v["FalsePrem"] = float(sum(1 for it in protected if it.labels.is_false_premise))
    local_prot = float(sum(1 for it in protected if it.labels.is_local_distractor))
    v["LocalProt"] = v["Residue"] = local_prot
    v["ProtLoad"] = float(len(protected))
    prot_ids = {it.id for it in protected}
    probes = {it.labels.probe: it.id for it in templates.values() if it.labels.probe}
    for name in ("HcHs", "McHs", "HcLs", "LcLs"):
        v[name] = float(probes.get(name) in prot_ids) if name in probes else 0.0
    v["GoodProt"] = (v["HcHs"] + v["McHs"]) / 2
    v["BadProt"] = (v["HcLs"] + v["LcLs"]) / 2

    late = _first_with(templates, "is_late_important")
    v["Recall"] = v["ImpRet"] = float(bool(late) and all(i in final.answerable for i in late))
    v["Regret"] = float(any(q.missing_evicted for q in trace.queries))
    relevant = [it for it in live if not it.is_summary
                and it.cues.query_relevance >= QUERY_RELEVANT and not it.revised]
    v["Useful"] = len(relevant) / len(live) if live else 0.0
    c = trace.counters
    writes = c.get("admissions", 0) + c.get("promotions", 0) + c.get("compressions", 0)
    v["WriteAmp"] = writes / max(1, len(relevant))
    v["Hit@1"] = float(final.rank == 1)
    v["MRR"] = 1.0 / final.rank if final.rank else 0.0

    summary = [it for it in live if it.stage == Stage.DURABLE]
    v["Details"] = float(sum(1 for it in summary if not it.labels.is_premise
                             and not it.labels.is_local_distractor))
    if stream.regime == "compression_cycle":
        v["Residue"] = float(any(it.labels.is_local_distractor for it in summary))
    lost_at = 0
    for idx, survivors in enumerate(trace.cycle_survivors, start=1):
        if premises and not all(p in survivors for p in premises):
            lost_at = idx
            break
    v["LossCycle"] = float(lost_at)

    wanted = REGIME_METRICS.get(stream.regime, METRIC_ORDER)
    return MetricsReport(stream.regime, trace.policy, {k: v[k] for k in wanted})


# ---------------------------------------------------------------- aggregation


@dataclass
class AggregateReport:
    regime: str
    policy: str
    count: int
    mean: dict[str, float]
    minimum: dict[str, float]
    maximum: dict[str, float]
    # LossCycle averages skip never-lost episodes; this counts those
    never_lost: int = 0
    label: str = ""
    extra: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.mean[name]

    def dispersion(self, name: str) -> float:
        return self.maximum[name] - self.minimum[name]


def aggregate(reports: Iterable[MetricsReport]) -> AggregateReport:
    reports = list(reports)
    if not reports:
        raise MetricsError("nothing to aggregate")
    cell = (reports[0].regime, reports[0].policy)
    if any((r.regime, r.policy) != cell for r in reports):
        raise MetricsError("reports come from more than one (regime, policy) cell")
    names = list(reports[0].values)
    mean, lo, hi = {}, {}, {}
    never_lost = 0
    for name in names:
        vals = [r.values[name] for r in reports]
        if name == "LossCycle":
            lost = [x for x in vals if x > 0]
            never_lost = len(vals) - len(lost)
            vals_for_mean = lost
        else:
            vals_for_mean = vals
        mean[name] = sum(vals_for_mean) / len(vals_for_mean) if vals_for_mean else 0.0
        lo[name] = min(vals)
        hi[name] = max(vals)
    return AggregateReport(cell[0], cell[1], len(reports), mean, lo, hi, never_lost)


# ---------------------------------------------------------------- output


def fmt(x: float) -> str:
    return f"{x:.4f}"


def to_csv(aggs: Iterable[AggregateReport], extra_columns: Iterable[str] = ()) -> str:
    aggs = list(aggs)
    extra_columns = list(extra_columns)
    names = [m for m in METRIC_ORDER if any(m in a.mean for a in aggs)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["regime", "policy", "seed_count", *extra_columns, *names])
    for a in aggs:
        w.writerow([a.regime, a.policy, a.count, *(a.extra.get(c, "") for c in extra_columns),
                    *(fmt(a.mean[m]) if m in a.mean else "" for m in names)])
    return buf.getvalue()


def to_markdown(aggs: Iterable[AggregateReport], title: str = "") -> str:
    aggs = list(aggs)
    names = [m for m in METRIC_ORDER if any(m in a.mean for a in aggs)]
    lines = []
    if title:
        lines += [f"### {title}", ""]
    extras = sorted({k for a in aggs for k in a.extra})
    head = ["Method", *extras, *names]
    lines.append("| " + " | ".join(head) + " |")
    lines.append("|" + "|".join(["---"] * len(head)) + "|")
    for a in aggs:
        cells = [a.label or a.policy, *(a.extra.get(k, "") for k in extras)]
        cells += [fmt(a.mean[m]) if m in a.mean else "" for m in names]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
