import dataclasses

import pytest

from memlife import harness
from memlife.harness import (
    CellSpec, ConfigError, FairnessError, RunConfig, Variant, check_fairness, execute,
    expand_capacity, golden_check, load_config, load_golden, parse_grid, parse_kv, plan_cells,
    run_cell,
)

FAST = 5


def test_parse_kv_comments_and_errors():
    kv = parse_kv("a = 1  # note\n\n# full comment\nb=x,y\na=2\n")
    assert kv == {"a": "2", "b": "x,y"}
    with pytest.raises(ConfigError, match="<config>:1"):
        parse_kv("novalue")


def test_expand_capacity():
    assert expand_capacity("very_tight..very_roomy") == list(harness.CAPACITY_SETTINGS)
    assert expand_capacity("tight,roomy") == ["tight", "roomy"]
    for bad in ("huge", "roomy..tight", "tight..huge"):
        with pytest.raises(ConfigError):
            expand_capacity(bad)


def test_parse_grid():
    assert parse_grid("0.45:0.50") == [0.45, 0.46, 0.47, 0.48, 0.49, 0.5]
    assert parse_grid("0:1:0.25") == [0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("0.02, 0.1") == [0.02, 0.1]
    for bad in ("", "1:0", "a,b", "0:1:0", "1:2:3:4"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_variant_label_roundtrip():
    v = Variant.of({"capacity_setting": "tight"}, {"fixed_init_strength": 0.2})
    assert v.label == "capacity_setting=tight,dynamics.fixed_init_strength=0.2"
    assert Variant.parse(v.label) == v
    assert Variant().label == ""


def test_config_layering(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("regimes=heavy\nepisodes=7\ndynamics.beta=2.5\npolicy.front_door.tau=0.6\n"
                 "regime.heavy.capacity_setting=tight\nthresholds.tau_r=0.1\n")
    cfg = load_config(str(f), ["episodes=3", "seed=9"])
    assert cfg.regimes == ["heavy"] and cfg.episodes == 3 and cfg.base_seed == 9
    assert cfg.dynamics_params().beta == 2.5
    assert cfg.policy_params == {"front_door": {"tau": 0.6}}
    thr = cfg.stage_thresholds()
    assert thr.tau_r_working == thr.tau_r_durable == 0.1
    cells = plan_cells(cfg)
    assert {c.variant.label for c in cells} == {"capacity_setting=tight"}


@pytest.mark.parametrize("sets", [
    ["regimes=nope"], ["policies=nope", "regimes=heavy"], ["tables=nope"], ["episodes=0"],
    ["workers=0"], ["dynamics.alpha=-1"], ["dynamics.bogus=1"], ["thresholds.bogus=1"],
    ["output.formats=pdf"], ["frobnicate=1"], ["episodes=many"], ["policy.x=1"],
    ["thresholds.tau_c_working=0.95"],
])
def test_config_errors(sets):
    with pytest.raises(ConfigError):
        load_config(None, sets)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(str(tmp_path / "absent.cfg"))


def test_env_output_dir_wins(monkeypatch, tmp_path):
    cfg = RunConfig(output_dir="elsewhere")
    monkeypatch.setenv(harness.OUTPUT_ENV, str(tmp_path))
    assert cfg.resolved_output_dir() == tmp_path
    monkeypatch.delenv(harness.OUTPUT_ENV)
    assert str(cfg.resolved_output_dir()) == "elsewhere"


def test_plan_cells_order_and_dedup():
    cfg = RunConfig(tables=["table1"], regimes=["premise_realization"], episodes=FAST)
    cells = plan_cells(cfg)
    assert [c.policy for c in cells] == list(harness.TABLES["table1"].policies)
    with pytest.raises(ConfigError):
        plan_cells(RunConfig())


def test_capacity_flag_expands_heavy():
    cfg = RunConfig(regimes=["heavy"], capacity=["tight", "roomy"], policies=["stagemem"])
    assert [c.path for c in plan_cells(cfg)] == [
        "heavy[capacity_setting=tight]/stagemem", "heavy[capacity_setting=roomy]/stagemem"]


def test_outputs_are_byte_identical_on_rerun(tmp_path):
    cfg = RunConfig(tables=list(harness.TABLES), episodes=FAST)
    a = harness.write_outputs(execute(plan_cells(cfg)), tmp_path / "a", harness.FORMATS)
    b = harness.write_outputs(execute(plan_cells(cfg)), tmp_path / "b", harness.FORMATS)
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes(), pa.name


def test_parallel_matches_serial():
    cfg = RunConfig(tables=["table1", "table4", "compression_cycle"], episodes=FAST)
    cells = plan_cells(cfg)
    serial = execute(cells, 1)
    parallel = execute(cells, 2)
    assert harness.render_csv(serial) == harness.render_csv(parallel)
    assert [r.stream_hash for r in serial] == [r.stream_hash for r in parallel]


def test_fairness_check_catches_different_streams():
    spec = CellSpec("heavy", Variant.of({"capacity_setting": "default"}), "stagemem", 0, 2)
    a = run_cell(spec)
    b = run_cell(dataclasses.replace(spec, policy="single_layer"))
    check_fairness([a, b])
    bad = dataclasses.replace(b, stream_hash="0" * 64)
    with pytest.raises(FairnessError):
        check_fairness([a, bad])


def test_run_cell_keeps_regime_metrics():
    res = run_cell(CellSpec("quadrant", Variant(), "stagemem", 0, FAST))
    assert set(res.agg.mean) == set(harness.REGIME_METRICS["quadrant"])
    assert res.agg.label == "StageMem"


def test_golden_file_parses():
    rows = load_golden()
    assert len(rows) > 150
    assert {r.op for r in rows} <= {"==", "~", "in", "<", ">"}


@pytest.mark.parametrize("op,args,x,ok", [
    ("==", (0.5,), 0.50004, True), ("==", (0.5,), 0.5001, False),
    ("~", (2.81, 0.5), 2.4, True), ("~", (2.81, 0.5), 3.4, False),
    ("in", (0, 0.1), 0.1, True), ("in", (0, 0.1), 0.11, False),
    ("<", (0.4,), 0.39, True), ("<", (0.4,), 0.4, False),
    (">", (0.4,), 0.41, True), (">", (0.4,), 0.4, False),
])
def test_golden_ops(op, args, x, ok):
    assert harness.GoldenRow("c", "m", op, args, 1).holds(x) is ok


def test_golden_parse_errors(tmp_path):
    for text in ("cell Prem ?? 1", "cell Prem == x", "cell Prem ~ 1"):
        f = tmp_path / "g.txt"
        f.write_text(text + "\n")
        with pytest.raises(ConfigError):
            load_golden(f)
    with pytest.raises(ConfigError, match="not found"):
        load_golden(tmp_path / "absent.txt")


def _table1_results():
    return execute(plan_cells(RunConfig(tables=["table1"], episodes=20)))


def test_golden_check_pass_and_perturbation(tmp_path):
    results = _table1_results()
    rows = [r for r in load_golden() if r.cell.startswith("premise_realization/")]
    assert golden_check(results, rows).ok
    # a tolerance cell off by twice its tolerance fails and names the cell
    f = tmp_path / "g.txt"
    load = results[1].agg.mean["FinalLoad"]
    f.write_text(f"premise_realization/confidence_only FinalLoad ~ {load + 0.2:.4f} 0.1\n")
    check = golden_check(results, load_golden(f))
    assert not check.ok
    assert "premise_realization/confidence_only FinalLoad" in check.report()


def test_golden_check_reports_missing_cells():
    rows = [r for r in load_golden() if r.cell.startswith("quadrant/")][:1]
    check = golden_check(_table1_results(), rows)
    assert not check.ok and check.missing == [rows[0].cell]
    assert golden_check(_table1_results(), rows, require_all=False).ok


def test_disabled_promotion_fails_the_check():
    cfg = load_config(None, ["episodes=3", "thresholds.tau_r=1.01"])
    out = harness.run_check(cfg)
    assert out.exit_code == harness.EXIT_CHECK_FAILED
    assert "FAIL" in out.check.report()


def test_front_door_sweep_outcome():
    out = harness.run_sweep("front_door", RunConfig(episodes=3), "0.45:0.95:0.05")
    assert out.extra["pareto"] == [(0.0, 0.0), (0.0769, 0.0), (1.0, 1.0)]
    assert out.extra["stagemem"] == (0.3077, 1.0)
    assert out.csv.startswith("tau,seed_count,ImpRet,FinalLoad\n")


def test_other_sweeps():
    cap = harness.run_sweep("capacity", RunConfig(episodes=2), "very_tight..tight", ["stagemem"])
    assert cap.csv.splitlines()[1].startswith("very_tight,stagemem,2,7,")
    fis = harness.run_sweep("fixed_init_strength", RunConfig(episodes=3))
    prem = {r.spec.variant.label: r.agg.mean["Prem"] for r in fis.extra["results"]}
    assert prem == {"dynamics.fixed_init_strength=0.02": 1.0,
                    "dynamics.fixed_init_strength=0.1": 1.0,
                    "dynamics.fixed_init_strength=0.2": 0.0,
                    "dynamics.fixed_init_strength=0.3": 0.0}
    with pytest.raises(ConfigError):
        harness.run_sweep("nope", RunConfig())


def test_dominates():
    assert harness.dominates((0.3, 1.0), (1.0, 1.0))
    assert not harness.dominates((0.3, 1.0), (0.3, 1.0))
    assert not harness.dominates((0.0, 0.0), (0.3, 1.0))


def test_dump_trace_is_deterministic():
    a = harness.dump_trace("premise_realization", "stagemem", 1, show_stream=True)
    assert a == harness.dump_trace("premise_realization", "stagemem", 1, show_stream=True)
    assert a.startswith("# regime=premise_realization policy=stagemem seed=1")
    assert "# metrics " in a and "\tadmit\t" in a
    with pytest.raises(ConfigError):
        harness.dump_trace("nope", "stagemem")
