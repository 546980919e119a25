"""Command line: ``memlife run|sweep|check|dump-trace|list``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .harness import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, ConfigError, FairnessError
from .policies import REGISTRY
from .scenarios import CAPACITY_SETTINGS, STRENGTH_SOURCES, ScenarioError, regime_names


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--episodes", type=int, help="episodes per cell")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--out", help=f"output directory (env {harness.OUTPUT_ENV} wins)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="memlife", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a regime x policy matrix")
    _common(run)
    run.add_argument("--regime", help="comma-separated regimes")
    run.add_argument("--policy", help="comma-separated policies (default: the regime's table)")
    run.add_argument("--table", help="comma-separated named tables, or 'all'")
    run.add_argument("--capacity", help="heavy capacity settings, e.g. very_tight..very_roomy")
    run.add_argument("--format", help="csv, markdown or both")
    run.add_argument("--check", action="store_true", help="compare against the golden file")
    run.add_argument("--golden", help="golden file (default: the packaged one)")

    sw = sub.add_parser("sweep", help="one-dimensional sweeps")
    _common(sw)
    sw.add_argument("kind", choices=harness.SWEEPS)
    sw.add_argument("--grid", help="lo:hi[:step] or a comma list")
    sw.add_argument("--policy", help="comma-separated policies")
    sw.add_argument("--capacity", help="heavy capacity setting for the front-door sweep")

    ck = sub.add_parser("check", help="run the golden cells and diff")
    _common(ck)
    ck.add_argument("--golden", help="golden file (default: the packaged one)")
    ck.add_argument("--write", action="store_true", help="also write the checked tables")

    dt = sub.add_parser("dump-trace", help="print one episode's trace")
    _common(dt)
    dt.add_argument("--regime", required=True)
    dt.add_argument("--policy", required=True)
    dt.add_argument("--variant", default="", help="e.g. capacity_setting=tight")
    dt.add_argument("--stream", action="store_true", help="print the stream first")

    sub.add_parser("list", help="list regimes, policies, tables and sweeps")
    return ap


def _config(args) -> harness.RunConfig:
    sets = list(args.sets)
    for flag, key in (("episodes", "episodes"), ("seed", "seed"), ("workers", "workers"),
                      ("out", "output.dir")):
        val = getattr(args, flag, None)
        if val is not None:
            sets.insert(0, f"{key}={val}")
    return harness.load_config(args.config, sets)


def cmd_run(args) -> int:
    extra = []
    if args.regime:
        extra.append(f"regimes={args.regime}")
    if args.policy:
        extra.append(f"policies={args.policy}")
    if args.table:
        tables = ",".join(harness.TABLES) if args.table == "all" else args.table
        extra.append(f"tables={tables}")
    if args.capacity:
        extra.append(f"capacity={args.capacity}")
    if args.format:
        extra.append(f"output.formats={args.format}")
    if args.check:
        extra.append("check=true")
    if args.golden:
        extra.append(f"golden={args.golden}")
    args.sets = extra + list(args.sets)
    cfg = _config(args)
    out = harness.run_matrix(cfg)
    if "markdown" in cfg.formats:
        sys.stdout.write(harness.render_markdown(out.results, cfg.episodes))
    for path in out.written:
        print(f"wrote {path}", file=sys.stderr)
    if out.check is not None:
        print(out.check.report(), file=sys.stderr)
    return out.exit_code


def cmd_sweep(args) -> int:
    if args.capacity:
        args.sets = [f"capacity={args.capacity}"] + list(args.sets)
    cfg = _config(args)
    policies = args.policy.split(",") if args.policy else None
    res = harness.run_sweep(args.kind, cfg, args.grid, policies)
    out_dir = cfg.resolved_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"sweep_{args.kind}.csv"
    path.write_text(res.csv)
    sys.stdout.write(res.csv)
    if "pareto" in res.extra:
        pts = ", ".join(f"({load:.4f}, {imp:.4f})" for load, imp in res.extra["pareto"])
        print(f"operating points (FinalLoad, ImpRet): {pts}")
        sl, si = res.extra["stagemem"]
        print(f"stagemem point: ({sl:.4f}, {si:.4f})")
    print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    if args.golden:
        args.sets = [f"golden={args.golden}"] + list(args.sets)
    cfg = _config(args)
    out = harness.run_check(cfg, write=args.write)
    print(out.check.report())
    return out.exit_code


def cmd_dump(args) -> int:
    cfg = _config(args)
    variant = harness.Variant.parse(args.variant)
    sys.stdout.write(harness.dump_trace(args.regime, args.policy, cfg.base_seed, cfg, variant,
                                        args.stream))
    return EXIT_OK


def cmd_list(_args) -> int:
    print("regimes:  " + ", ".join(regime_names()))
    print("policies:")
    for spec in REGISTRY.values():
        print(f"  {spec.name:24s} {spec.family:24s} {spec.label}")
    print("tables:")
    for t in harness.TABLES.values():
        print(f"  {t.name:18s} {t.regime:20s} {t.title}")
    print("sweeps:   " + ", ".join(harness.SWEEPS))
    print("capacity: " + ", ".join(CAPACITY_SETTINGS))
    print("sources:  " + ", ".join(STRENGTH_SOURCES))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "check": cmd_check, "dump-trace": cmd_dump,
            "list": cmd_list}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ScenarioError, KeyError, ValueError) as exc:
        print(f"memlife: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FairnessError as exc:
        print(f"memlife: fairness check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
