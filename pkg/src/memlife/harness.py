"""Matrix runs, sweeps, key=value configuration and golden-table checks.

A *cell* is one (regime, variant, policy) triple run over a block of seeds
``base_seed .. base_seed + episodes - 1``.  The variant carries generator
options (``capacity_setting=tight``, ``source=noisy``) and dynamics
overrides (``dynamics.fixed_init_strength=0.2``).  Streams depend only on
(regime, variant, seed), so every policy in a row sees the same candidate
sequence; the runner recomputes that sequence hash for every cell and
refuses to write results when two policies disagree.
"""

from __future__ import annotations

import dataclasses
import hashlib
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from .dynamics import DynamicsParams, ParameterError
from .metrics import REGIME_METRICS, AggregateReport, aggregate, compute_metrics, to_csv, to_markdown
from .policies import REGISTRY, get_spec, make_policy, run_policy
from .scenarios import CAPACITY_SETTINGS, HEAVY_CAPACITY, STRENGTH_SOURCES, generate, regime_names
from .stagemem import StageThresholds

OUTPUT_ENV = "MEMLIFE_OUTPUT_DIR"
DEFAULT_EPISODES = 100
FORMATS = ("csv", "markdown")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


class FairnessError(RuntimeError):
    pass


# ---------------------------------------------------------------- tables


@dataclass(frozen=True)
class Variant:
    """Generator options plus dynamics overrides, kept as sorted tuples."""

    options: tuple[tuple[str, Any], ...] = ()
    dynamics: tuple[tuple[str, Any], ...] = ()

    @classmethod
    def of(cls, options: dict | None = None, dynamics: dict | None = None) -> "Variant":
        return cls(tuple(sorted((options or {}).items())), tuple(sorted((dynamics or {}).items())))

    @property
    def label(self) -> str:
        parts = [f"{k}={v}" for k, v in self.options]
        parts += [f"dynamics.{k}={v}" for k, v in self.dynamics]
        return ",".join(parts)

    @classmethod
    def parse(cls, text: str) -> "Variant":
        opts, dyn = {}, {}
        for part in filter(None, text.split(",")):
            key, _, raw = part.partition("=")
            if key.startswith("dynamics."):
                dyn[key[len("dynamics."):]] = _coerce(raw)
            else:
                opts[key] = _coerce(raw)
        return cls.of(opts, dyn)


@dataclass(frozen=True)
class Table:
    name: str
    title: str
    regime: str
    policies: tuple[str, ...]
    variants: tuple[Variant, ...] = (Variant(),)


HEAVY_POLICIES = ("stagemem", "single_layer", "front_door", "reinforced_flat",
                  "aggressive_tiering", "hybrid_layering")
# the capacity sweep leaves out the reinforced store
CAPACITY_POLICIES = ("stagemem", "single_layer", "front_door", "aggressive_tiering",
                     "hybrid_layering")

TABLES: dict[str, Table] = {t.name: t for t in (
    Table("table1", "Premise-realization compression test", "premise_realization",
          ("stagemem", "confidence_only", "single_state", "single_layer")),
    Table("table2", "Heavy admitted-content comparison", "heavy", HEAVY_POLICIES,
          (Variant.of({"capacity_setting": "default"}),)),
    Table("capacity", "Capacity sweep on the heavy regime", "heavy", CAPACITY_POLICIES,
          tuple(Variant.of({"capacity_setting": s}) for s in CAPACITY_SETTINGS)),
    Table("table3", "Gate, strength and lifecycle diagnostic", "gate_strength",
          ("front_door_gate", "confidence_only", "strength_only", "stagemem")),
    Table("table4", "Confidence and strength quadrant diagnostic", "quadrant",
          ("stagemem", "cue_aware_flat", "binary_flag", "confidence_only", "confidence_flat")),
    Table("table5", "Implicit retention heuristic diagnostic", "implicit",
          ("recency", "frequency", "query_relevance", "generic_importance", "cue_aware_flat",
           "stagemem")),
    Table("strength_source", "Strength-source sensitivity", "strength_source",
          ("stagemem", "generic_importance"),
          tuple(Variant.of({"source": s}) for s in STRENGTH_SOURCES if s != "cue_rule")),
    Table("compression_cycle", "Lossy summarization-cycle abstraction", "compression_cycle",
          ("strength_aware", "confidence_only_summary", "flat_salience", "frequency_summary",
           "recency_summary")),
    Table("sensitivity", "Premise-realization sensitivity", "premise_realization", ("stagemem",),
          tuple(Variant.of({"shock_scale": s}) for s in (0.5, 1.0, 1.5))
          + tuple(Variant.of({"confidence_scale": s}) for s in (0.7, 0.85))
          + tuple(Variant.of(dynamics={"fixed_init_strength": s}) for s in (0.02, 0.1, 0.2, 0.3))),
)}

# a regime named on the command line without policies runs its default table
REGIME_TABLE = {"premise_realization": "table1", "heavy": "table2", "gate_strength": "table3",
                "quadrant": "table4", "implicit": "table5", "strength_source": "strength_source",
                "compression_cycle": "compression_cycle"}


# ---------------------------------------------------------------- config


def _coerce(raw: str) -> Any:
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null"):
        return None
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            pass
    return raw


def parse_kv(text: str, origin: str = "<config>") -> dict[str, str]:
    """Plain ``key=value`` lines; ``#`` starts a comment; later keys win."""
    out: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{origin}:{n}: expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


def parse_sets(sets: Iterable[str]) -> dict[str, str]:
    return parse_kv("\n".join(sets), "--set")


def split_list(raw: str) -> list[str]:
    return [x.strip() for x in raw.split(",") if x.strip()]


def expand_capacity(raw: str) -> list[str]:
    """``tight`` | ``tight,roomy`` | ``very_tight..very_roomy``."""
    out: list[str] = []
    for part in split_list(raw):
        if ".." in part:
            lo, hi = part.split("..", 1)
            if lo not in CAPACITY_SETTINGS or hi not in CAPACITY_SETTINGS:
                raise ConfigError(f"bad capacity range {part!r}")
            i, j = CAPACITY_SETTINGS.index(lo), CAPACITY_SETTINGS.index(hi)
            if i > j:
                raise ConfigError(f"capacity range {part!r} runs backwards")
            out += CAPACITY_SETTINGS[i:j + 1]
        elif part in CAPACITY_SETTINGS:
            out.append(part)
        else:
            raise ConfigError(f"unknown capacity setting {part!r}; "
                              f"choose from {', '.join(CAPACITY_SETTINGS)}")
    return out


def parse_grid(raw: str, step: float = 0.01) -> list[float]:
    """``0.45:0.95`` (step 0.01), ``0.45:0.95:0.05`` or ``0.02,0.1,0.2``."""
    raw = raw.strip()
    if ":" in raw:
        parts = [float(x) for x in raw.split(":")]
        if len(parts) == 3:
            lo, hi, step = parts
        elif len(parts) == 2:
            lo, hi = parts
        else:
            raise ConfigError(f"bad grid {raw!r}")
        if step <= 0 or hi < lo:
            raise ConfigError(f"bad grid {raw!r}")
        n = int(round((hi - lo) / step))
        return [round(lo + k * step, 10) for k in range(n + 1)]
    try:
        vals = [float(x) for x in split_list(raw)]
    except ValueError:
        raise ConfigError(f"bad grid {raw!r}") from None
    if not vals:
        raise ConfigError("empty grid")
    return vals


@dataclass
class RunConfig:
    regimes: list[str] = field(default_factory=list)
    policies: list[str] = field(default_factory=list)
    tables: list[str] = field(default_factory=list)
    base_seed: int = 0
    episodes: int = DEFAULT_EPISODES
    capacity: list[str] = field(default_factory=list)
    dynamics: dict[str, Any] = field(default_factory=dict)
    thresholds: dict[str, Any] = field(default_factory=dict)
    policy_params: dict[str, dict[str, Any]] = field(default_factory=dict)
    regime_options: dict[str, dict[str, Any]] = field(default_factory=dict)
    output_dir: str = "memlife_out"
    formats: list[str] = field(default_factory=lambda: list(FORMATS))
    workers: int = 1
    check: bool = False
    golden: str | None = None

    def validate(self) -> None:
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for r in self.regimes:
            if r not in regime_names():
                raise ConfigError(f"unknown regime {r!r}; choose from {', '.join(regime_names())}")
        for p in [*self.policies, *self.policy_params]:
            if p not in REGISTRY:
                raise ConfigError(f"unknown policy {p!r}; registry: {', '.join(REGISTRY)}")
        for t in self.tables:
            if t not in TABLES:
                raise ConfigError(f"unknown table {t!r}; choose from {', '.join(TABLES)}")
        for r in self.regime_options:
            if r not in regime_names():
                raise ConfigError(f"unknown regime {r!r} in regime options")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ConfigError(f"unknown output format(s) {bad}; choose from {FORMATS}")
        try:
            self.dynamics_params()
            self.stage_thresholds()
        except (TypeError, ValueError, ParameterError) as exc:
            raise ConfigError(str(exc)) from None

    def dynamics_params(self, extra: Iterable[tuple[str, Any]] = ()) -> DynamicsParams:
        kw = {**self.dynamics, **dict(extra)}
        unknown = set(kw) - {f.name for f in dataclasses.fields(DynamicsParams)}
        if unknown:
            raise ConfigError(f"unknown dynamics key(s): {', '.join(sorted(unknown))}")
        return DynamicsParams(**kw)

    def stage_thresholds(self) -> StageThresholds:
        kw = dict(self.thresholds)
        # shorthands that move both boundaries together
        for short in ("tau_c", "tau_r"):
            if short in kw:
                v = kw.pop(short)
                kw.setdefault(f"{short}_working", v)
                kw.setdefault(f"{short}_durable", v)
        unknown = set(kw) - {f.name for f in dataclasses.fields(StageThresholds)}
        if unknown:
            raise ConfigError(f"unknown threshold key(s): {', '.join(sorted(unknown))}")
        return StageThresholds(**kw)

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output_dir)


def config_from_mapping(kv: dict[str, str], base: RunConfig | None = None) -> RunConfig:
    cfg = dataclasses.replace(base) if base else RunConfig()
    cfg.dynamics = dict(cfg.dynamics)
    cfg.thresholds = dict(cfg.thresholds)
    cfg.policy_params = {k: dict(v) for k, v in cfg.policy_params.items()}
    cfg.regime_options = {k: dict(v) for k, v in cfg.regime_options.items()}
    for key, raw in kv.items():
        try:
            if key in ("regimes", "regime"):
                cfg.regimes = split_list(raw)
            elif key in ("policies", "policy"):
                cfg.policies = split_list(raw)
            elif key in ("tables", "table"):
                cfg.tables = split_list(raw)
            elif key in ("seed", "seeds.base"):
                cfg.base_seed = int(raw)
            elif key in ("episodes", "seeds.episodes"):
                cfg.episodes = int(raw)
            elif key == "capacity":
                cfg.capacity = expand_capacity(raw)
            elif key in ("output.dir", "output_dir"):
                cfg.output_dir = raw
            elif key in ("output.formats", "formats"):
                cfg.formats = split_list(raw)
            elif key == "workers":
                cfg.workers = int(raw)
            elif key == "check":
                cfg.check = bool(_coerce(raw))
            elif key == "golden":
                cfg.golden = raw
            elif key.startswith("dynamics."):
                cfg.dynamics[key.split(".", 1)[1]] = _coerce(raw)
            elif key.startswith("thresholds."):
                cfg.thresholds[key.split(".", 1)[1]] = _coerce(raw)
            elif key.startswith("policy."):
                _, name, param = _three(key)
                cfg.policy_params.setdefault(name, {})[param] = _coerce(raw)
            elif key.startswith("regime."):
                _, name, opt = _three(key)
                cfg.regime_options.setdefault(name, {})[opt] = _coerce(raw)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return cfg


def _three(key: str) -> tuple[str, str, str]:
    parts = key.split(".", 2)
    if len(parts) != 3 or not all(parts):
        raise ConfigError(f"expected {parts[0]}.<name>.<param>, got {key!r}")
    return parts[0], parts[1], parts[2]


def load_config(path: str | None = None, sets: Sequence[str] = (),
                base: RunConfig | None = None) -> RunConfig:
    """Defaults, then the config file, then ``--set`` overrides."""
    kv: dict[str, str] = {}
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        kv.update(parse_kv(text, path))
    kv.update(parse_sets(sets))
    cfg = config_from_mapping(kv, base)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------- cells


@dataclass(frozen=True)
class CellSpec:
    regime: str
    variant: Variant
    policy: str
    base_seed: int
    episodes: int
    dynamics: tuple[tuple[str, Any], ...] = ()
    thresholds: tuple[tuple[str, Any], ...] = ()
    policy_params: tuple[tuple[str, Any], ...] = ()

    @property
    def path(self) -> str:
        return cell_path(self.regime, self.variant.label, self.policy)


def cell_path(regime: str, variant: str, policy: str) -> str:
    return f"{regime}[{variant}]/{policy}" if variant else f"{regime}/{policy}"


@dataclass
class CellResult:
    spec: CellSpec
    agg: AggregateReport
    stream_hash: str


def run_cell(spec: CellSpec) -> CellResult:
    cfg = RunConfig(dynamics=dict(spec.dynamics), thresholds=dict(spec.thresholds))
    params = cfg.dynamics_params(spec.variant.dynamics)
    thresholds = cfg.stage_thresholds()
    opts = dict(spec.variant.options)
    reports = []
    digest = hashlib.sha256()
    for k in range(spec.episodes):
        stream = generate(spec.regime, spec.base_seed + k, **opts)
        digest.update(stream.admitted_sequence_hash().encode())
        ctl = make_policy(spec.policy, stream.capacity, params=params, thresholds=thresholds,
                          overrides=dict(spec.policy_params) or None)
        reports.append(compute_metrics(run_policy(ctl, stream), stream))
    agg = aggregate(reports)
    agg.label = get_spec(spec.policy).label
    if spec.variant.label:
        agg.extra["variant"] = spec.variant.label
    keep = REGIME_METRICS.get(spec.regime)
    if keep:
        for d in (agg.mean, agg.minimum, agg.maximum):
            for name in list(d):
                if name not in keep:
                    del d[name]
    return CellResult(spec, agg, digest.hexdigest())


def plan_cells(cfg: RunConfig) -> list[CellSpec]:
    """Expand a config into cells, in canonical order."""
    rows: list[tuple[str, Variant, tuple[str, ...]]] = []
    for t in cfg.tables:
        table = TABLES[t]
        rows += [(table.regime, v, table.policies) for v in table.variants]
    for regime in cfg.regimes:
        table = TABLES[REGIME_TABLE[regime]]
        policies = tuple(cfg.policies) or table.policies
        base_opts = dict(cfg.regime_options.get(regime, {}))
        if regime == "heavy":
            settings = cfg.capacity or [base_opts.pop("capacity_setting", "default")]
            variants = [Variant.of({**base_opts, "capacity_setting": s}) for s in settings]
        elif base_opts:
            variants = [Variant.of(base_opts)]
        else:
            variants = list(table.variants)
        rows += [(regime, v, policies) for v in variants]
    if not rows:
        raise ConfigError("nothing to run: name at least one regime or table")
    thresholds = tuple(sorted(cfg.thresholds.items()))
    dyn = tuple(sorted(cfg.dynamics.items()))
    seen: set[tuple] = set()
    cells = []
    for regime, variant, policies in rows:
        for p in policies:
            key = (regime, variant, p)
            if key in seen:
                continue
            seen.add(key)
            cells.append(CellSpec(regime, variant, p, cfg.base_seed, cfg.episodes, dyn,
                                  thresholds, tuple(sorted(cfg.policy_params.get(p, {}).items()))))
    return cells


def execute(cells: Sequence[CellSpec], workers: int = 1) -> list[CellResult]:
    """Run cells, possibly in parallel; results come back in input order."""
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(c) for c in cells]
    check_fairness(results)
    return results


def check_fairness(results: Iterable[CellResult]) -> None:
    seen: dict[tuple[str, Variant], tuple[str, str]] = {}
    for r in results:
        key = (r.spec.regime, r.spec.variant)
        if key in seen and seen[key][0] != r.stream_hash:
            raise FairnessError(f"{r.spec.path} saw a different candidate stream than "
                                f"{seen[key][1]}")
        seen.setdefault(key, (r.stream_hash, r.spec.path))


# ---------------------------------------------------------------- output


def group_by_regime(results: Iterable[CellResult]) -> dict[str, list[CellResult]]:
    out: dict[str, list[CellResult]] = {}
    for r in results:
        out.setdefault(r.spec.regime, []).append(r)
    return out


def render_csv(results: Sequence[CellResult]) -> str:
    extra = ["variant"] if any(r.spec.variant.label for r in results) else []
    return to_csv([r.agg for r in results], extra)


def render_markdown(results: Sequence[CellResult], episodes: int | None = None) -> str:
    parts = []
    for regime, rs in group_by_regime(results).items():
        table = TABLES.get(REGIME_TABLE.get(regime, ""))
        title = table.title if table else regime
        parts.append(to_markdown([r.agg for r in rs], f"{title} ({regime})"))
    if episodes is not None:
        parts.append(f"Means over {episodes} seeded episodes per cell.\n")
    return "\n".join(parts)


def write_outputs(results: Sequence[CellResult], out_dir: Path, formats: Sequence[str],
                  stem: str = "report") -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        for regime, rs in group_by_regime(results).items():
            path = out_dir / f"{regime}.csv"
            path.write_text(render_csv(rs))
            written.append(path)
    if "markdown" in formats:
        eps = results[0].spec.episodes if results else None
        path = out_dir / f"{stem}.md"
        path.write_text(render_markdown(results, eps))
        written.append(path)
    return written


# ---------------------------------------------------------------- goldens


GOLDEN_LINE = re.compile(r"^(?P<cell>\S+)\s+(?P<metric>\S+)\s+(?P<op>==|~|in|<|>)\s+(?P<args>.+)$")
EXACT_TOL = 5e-5


@dataclass(frozen=True)
class GoldenRow:
    cell: str
    metric: str
    op: str
    args: tuple[float, ...]
    line: int

    def holds(self, x: float) -> bool:
        if self.op == "==":
            return abs(x - self.args[0]) <= EXACT_TOL
        if self.op == "~":
            return abs(x - self.args[0]) <= self.args[1] + 1e-12
        if self.op == "in":
            return self.args[0] - 1e-12 <= x <= self.args[1] + 1e-12
        if self.op == "<":
            return x < self.args[0]
        return x > self.args[0]

    def describe(self) -> str:
        if self.op == "~":
            return f"{self.args[0]:.4f} ± {self.args[1]:.4f}"
        if self.op == "in":
            return f"in [{self.args[0]:.4f}, {self.args[1]:.4f}]"
        return f"{self.op} {self.args[0]:.4f}"


def default_golden_path() -> Path:
    return Path(str(resources.files("memlife") / "data" / "golden.txt"))


def load_golden(path: str | Path | None = None) -> list[GoldenRow]:
    path = Path(path) if path else default_golden_path()
    try:
        text = path.read_text()
    except OSError:
        raise ConfigError(f"golden file not found: {path}") from None
    rows = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = GOLDEN_LINE.match(line)
        if not m:
            raise ConfigError(f"{path}:{n}: cannot parse golden row {line!r}")
        try:
            args = tuple(float(x) for x in m["args"].split())
        except ValueError:
            raise ConfigError(f"{path}:{n}: non-numeric golden value") from None
        need = {"==": 1, "~": 2, "in": 2, "<": 1, ">": 1}[m["op"]]
        if len(args) != need:
            raise ConfigError(f"{path}:{n}: {m['op']} takes {need} value(s)")
        rows.append(GoldenRow(m["cell"], m["metric"], m["op"], args, n))
    return rows


def golden_cells(rows: Iterable[GoldenRow]) -> list[tuple[str, Variant, str]]:
    out, seen = [], set()
    for r in rows:
        if r.cell in seen:
            continue
        seen.add(r.cell)
        head, _, policy = r.cell.rpartition("/")
        m = re.match(r"^([a-z_]+)(?:\[(.*)\])?$", head)
        if not m or not policy:
            raise ConfigError(f"bad golden cell path {r.cell!r}")
        out.append((m[1], Variant.parse(m[2] or ""), policy))
    return out


@dataclass
class CheckResult:
    failures: list[str]
    checked: int
    missing: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    def report(self) -> str:
        lines = [f"{self.checked} golden assertions checked, {len(self.failures)} failed"]
        lines += [f"FAIL {f}" for f in self.failures]
        return "\n".join(lines)


def golden_check(results: Iterable[CellResult], rows: Iterable[GoldenRow],
                 require_all: bool = True) -> CheckResult:
    by_path = {r.spec.path: r.agg for r in results}
    failures, missing = [], []
    checked = 0
    for row in rows:
        agg = by_path.get(row.cell)
        if agg is None:
            missing.append(row.cell)
            if require_all:
                failures.append(f"{row.cell} {row.metric}: cell was not run")
            continue
        if row.metric not in agg.mean:
            failures.append(f"{row.cell} {row.metric}: metric not reported")
            continue
        checked += 1
        x = agg.mean[row.metric]
        if not row.holds(x):
            failures.append(f"{row.cell} {row.metric}: got {x:.4f}, want {row.describe()}")
    return CheckResult(failures, checked, sorted(set(missing)))


def golden_matrix(rows: Iterable[GoldenRow], cfg: RunConfig) -> list[CellSpec]:
    thresholds = tuple(sorted(cfg.thresholds.items()))
    dyn = tuple(sorted(cfg.dynamics.items()))
    return [CellSpec(regime, variant, policy, cfg.base_seed, cfg.episodes, dyn, thresholds,
                     tuple(sorted(cfg.policy_params.get(policy, {}).items())))
            for regime, variant, policy in golden_cells(rows)]


# ---------------------------------------------------------------- top level


@dataclass
class MatrixOutcome:
    results: list[CellResult]
    written: list[Path]
    check: CheckResult | None
    exit_code: int


def run_matrix(cfg: RunConfig, write: bool = True) -> MatrixOutcome:
    cfg.validate()
    cells = plan_cells(cfg)
    results = execute(cells, cfg.workers)
    written = write_outputs(results, cfg.resolved_output_dir(), cfg.formats) if write else []
    check = None
    code = EXIT_OK
    if cfg.check:
        check = golden_check(results, load_golden(cfg.golden), require_all=False)
        code = EXIT_OK if check.ok else EXIT_CHECK_FAILED
    return MatrixOutcome(results, written, check, code)


def run_check(cfg: RunConfig, write: bool = False) -> MatrixOutcome:
    """Run every cell named in the golden file and compare."""
    cfg.validate()
    rows = load_golden(cfg.golden)
    results = execute(golden_matrix(rows, cfg), cfg.workers)
    written = write_outputs(results, cfg.resolved_output_dir(), cfg.formats, "golden") \
        if write else []
    check = golden_check(results, rows)
    return MatrixOutcome(results, written, check,
                         EXIT_OK if check.ok else EXIT_CHECK_FAILED)


# ---------------------------------------------------------------- sweeps


SWEEPS = ("front_door", "capacity", "fixed_init_strength", "confidence_scale", "shock_scale")
SWEEP_DEFAULT_GRID = {
    "front_door": "0.45:0.95",
    "capacity": ",".join(CAPACITY_SETTINGS),
    "fixed_init_strength": "0.02,0.1,0.2,0.3",
    "confidence_scale": "0.7,0.85,1.0",
    "shock_scale": "0.5,1.0,1.5",
}


@dataclass
class SweepOutcome:
    kind: str
    csv: str
    extra: dict[str, Any] = field(default_factory=dict)


def run_sweep(kind: str, cfg: RunConfig, grid: str | None = None,
              policies: Sequence[str] | None = None) -> SweepOutcome:
    if kind not in SWEEPS:
        raise ConfigError(f"unknown sweep {kind!r}; choose from {', '.join(SWEEPS)}")
    cfg.validate()
    grid = grid or SWEEP_DEFAULT_GRID[kind]
    if kind == "front_door":
        return _sweep_front_door(cfg, parse_grid(grid))
    if kind == "capacity":
        settings = expand_capacity(grid)
        sub = dataclasses.replace(cfg, regimes=["heavy"], tables=[], capacity=settings,
                                  policies=list(policies or cfg.policies or CAPACITY_POLICIES))
        results = execute(plan_cells(sub), cfg.workers)
        return SweepOutcome(kind, _capacity_csv(results), {"results": results})
    values = parse_grid(grid)
    cells = []
    for v in values:
        if kind == "fixed_init_strength":
            variant = Variant.of(dynamics={"fixed_init_strength": v})
        else:
            variant = Variant.of({kind: v})
        for p in policies or cfg.policies or ("stagemem",):
            if p not in REGISTRY:
                raise ConfigError(f"unknown policy {p!r}")
            cells.append(CellSpec("premise_realization", variant, p, cfg.base_seed,
                                  cfg.episodes, tuple(sorted(cfg.dynamics.items())),
                                  tuple(sorted(cfg.thresholds.items()))))
    results = execute(cells, cfg.workers)
    return SweepOutcome(kind, render_csv(results), {"results": results})


def _capacity_csv(results: Sequence[CellResult]) -> str:
    lines = ["capacity,policy,seed_count,slots,ImpRet,FinalLoad,NonCrit,BudgetHit"]
    for r in results:
        setting = dict(r.spec.variant.options)["capacity_setting"]
        m = r.agg.mean
        lines.append(f"{setting},{r.spec.policy},{r.agg.count},{HEAVY_CAPACITY[setting]},"
                     f"{m['ImpRet']:.4f},{m['FinalLoad']:.4f},{m['NonCrit']:.4f},"
                     f"{m['BudgetHit']:.4f}")
    return "\n".join(lines) + "\n"


def _sweep_front_door(cfg: RunConfig, taus: list[float]) -> SweepOutcome:
    setting = (cfg.capacity or ["default"])[0]
    cells = [CellSpec("heavy", Variant.of({"capacity_setting": setting}), "front_door",
                      cfg.base_seed, cfg.episodes, tuple(sorted(cfg.dynamics.items())),
                      tuple(sorted(cfg.thresholds.items())), (("tau", tau),))
             for tau in taus]
    ref = CellSpec("heavy", Variant.of({"capacity_setting": setting}), "stagemem",
                   cfg.base_seed, cfg.episodes, tuple(sorted(cfg.dynamics.items())),
                   tuple(sorted(cfg.thresholds.items())))
    results = execute([*cells, ref], cfg.workers)
    lines = ["tau,seed_count,ImpRet,FinalLoad"]
    points = set()
    for tau, r in zip(taus, results):
        imp, load = round(r.agg.mean["ImpRet"], 4), round(r.agg.mean["FinalLoad"], 4)
        points.add((load, imp))
        lines.append(f"{tau:.2f},{r.agg.count},{imp:.4f},{load:.4f}")
    sm = results[-1].agg.mean
    stagemem_point = (round(sm["FinalLoad"], 4), round(sm["ImpRet"], 4))
    return SweepOutcome("front_door", "\n".join(lines) + "\n",
                        {"pareto": sorted(points), "stagemem": stagemem_point,
                         "results": results[:-1]})


def dominates(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """(load, recall) point ``a`` is at least as good as ``b`` on both axes and better on one."""
    return a[0] <= b[0] and a[1] >= b[1] and a != b


# ---------------------------------------------------------------- traces


def dump_trace(regime: str, policy: str, seed: int = 0, cfg: RunConfig | None = None,
               variant: Variant | None = None, show_stream: bool = False) -> str:
    cfg = cfg or RunConfig()
    variant = variant or Variant()
    if regime not in regime_names():
        raise ConfigError(f"unknown regime {regime!r}")
    if policy not in REGISTRY:
        raise ConfigError(f"unknown policy {policy!r}")
    opts = {**cfg.regime_options.get(regime, {}), **dict(variant.options)}
    stream = generate(regime, seed, **opts)
    ctl = make_policy(policy, stream.capacity, params=cfg.dynamics_params(variant.dynamics),
                      thresholds=cfg.stage_thresholds(),
                      overrides=cfg.policy_params.get(policy) or None)
    trace = run_policy(ctl, stream)
    lines = [f"# regime={regime} policy={policy} seed={seed} "
             f"stream={stream.admitted_sequence_hash()[:16]}"]
    if show_stream:
        lines += ["# stream"] + [f"# {x}" for x in stream.to_lines()]
    lines += [r.line() for r in trace.records]
    rep = compute_metrics(trace, stream)
    keep = REGIME_METRICS.get(regime, tuple(rep.values))
    lines.append("# metrics " + " ".join(f"{k}={rep.values[k]:.4f}" for k in keep
                                         if k in rep.values))
    return "\n".join(lines) + "\n"
