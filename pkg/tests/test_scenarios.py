"""Config parsing, built-in scenario grids, CSV and report emission."""

import csv

import pytest

from aoilab import ConfigurationError
from aoilab.reports import (
    PER_SOURCE_HEADER,
    SUMMARY_HEADER,
    analyze_csv,
    emit_csv,
    format_analyze_report,
    run_scenarios,
)
from aoilab.scenarios import (
    TABLE1_TARGETS,
    parse_config,
    scenario_fig,
    table1_policies,
    table1_sim_for,
)

MINIMAL = """
scenarios:
  - id: tiny
    sources:
      - {alpha: 1.0, p: 1.0, L: 1}
    policies:
      - {kind: greedy}
    sim: {T: 1000, seed: 0}
"""


def test_parse_minimal():
    scenarios = parse_config(MINIMAL)
    assert len(scenarios) == 1
    sc = scenarios[0]
    assert sc.id == "tiny"
    assert sc.params[0].L == 1
    assert sc.policies[0][0] == "greedy"
    assert sc.sim.horizon == 1000


def test_parse_errors_name_the_field():
    bad_p = MINIMAL.replace("p: 1.0", "p: 1.5")
    with pytest.raises(ConfigurationError, match=r"sources\[0\]"):
        parse_config(bad_p)
    bad_l = MINIMAL.replace("L: 1", "L: 0")
    with pytest.raises(ConfigurationError, match=r"sources\[0\]"):
        parse_config(bad_l)
    bad_kind = MINIMAL.replace("kind: greedy", "kind: bogus")
    with pytest.raises(ConfigurationError, match="unknown policy kind"):
        parse_config(bad_kind)
    with pytest.raises(ConfigurationError, match="not valid YAML"):
        parse_config("scenarios: [}{")


def test_parse_duplicate_ids_rejected():
    doubled = MINIMAL + MINIMAL.split("scenarios:")[1]
    with pytest.raises(ConfigurationError, match="duplicate"):
        parse_config(doubled)


def test_parse_sweep_materializes_instances():
    cfg = """
scenarios:
  - id: sweep_p
    sources:
      - {alpha: 1.0, p: 0.5, L: 2}
      - {alpha: 2.0, p: 0.5, L: 5}
    policies:
      - {kind: srp, mu: optimal}
    sim: {T: 5000, seed: 1}
    sweep:
      parameter: p
      values: [0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0]
"""
    scenarios = parse_config(cfg)
    assert len(scenarios) == 17
    assert all(sc.id.startswith("sweep_p[p=") for sc in scenarios)
    assert len({sc.id for sc in scenarios}) == 17
    # the optimal mu is resolved per sweep value, not once
    first, last = scenarios[0], scenarios[-1]
    assert first.params[0].p == 0.2 and last.params[0].p == 1.0
    mu_first = first.policies[0][1].mu
    assert sum(mu_first) == pytest.approx(1.0)


def test_parse_policy_variants():
    cfg = """
scenarios:
  - id: all
    sources:
      - {alpha: 1.0, p: 0.5, L: 2}
      - {alpha: 2.0, p: 0.8, L: 1}
    policies:
      - {kind: srp, mu: [0.4, 0.6]}
      - {kind: nsrp, mu: uniform}
      - {kind: mwl1}
      - {kind: max_weight, variant: plain}
      - {kind: fixed, assignment: [0, 1, null]}
    sim: {T: 100, seed: 0}
"""
    sc = parse_config(cfg)[0]
    labels = [l for l, _ in sc.policies]
    assert labels == ["srp", "nsrp_uniform", "mwl1", "max_weight", "fixed"]
    assert sc.policies[4][1].assignment == (0, 1, None)


def test_parse_fixed_assignment_range():
    cfg = MINIMAL.replace(
        "- {kind: greedy}", "- {kind: fixed, assignment: [0, 3]}"
    )
    with pytest.raises(ConfigurationError, match=r"assignment\[1\]"):
        parse_config(cfg)


def test_fig3_grid_shape():
    scenarios = scenario_fig(3, horizon=10**4, replications=1)
    assert len(scenarios) == 17
    sc = scenarios[0]
    assert "p=0.20" in sc.id
    assert len(sc.params) == 10
    assert [s.alpha for s in sc.params[:5]] == [5.0] * 5
    assert [s.L for s in sc.params[:5]] == [2] * 5
    assert [s.alpha for s in sc.params[5:]] == [1.0] * 5
    assert [s.L for s in sc.params[5:]] == [50] * 5
    labels = [l for l, _ in sc.policies]
    assert labels == ["srp_opt", "nsrp_opt", "greedy", "mwl1", "max_weight"]


def test_fig4_lengths():
    scenarios = scenario_fig(4, horizon=10**4, replications=1)
    first = scenarios[0]
    assert "Lstar=15" in first.id
    assert [s.L for s in first.params[5:]] == [13, 14, 15, 16, 17]
    assert [s.p for s in first.params[:5]] == [0.8] * 5
    assert [s.p for s in first.params[5:]] == [0.4] * 5
    assert len(scenarios) == 18


def test_fig5_weights():
    scenarios = scenario_fig(5, horizon=10**4, replications=1)
    assert [sc.params[0].alpha for sc in scenarios] == [float(a) for a in range(2, 21, 2)]


def test_fig6_deterministic_given_seed():
    a = scenario_fig(6, seed=5, horizon=10**4, replications=1)
    b = scenario_fig(6, seed=5, horizon=10**4, replications=1)
    c = scenario_fig(6, seed=6, horizon=10**4, replications=1)
    assert [sc.params for sc in a] == [sc.params for sc in b]
    assert [sc.params for sc in a] != [sc.params for sc in c]
    assert [len(sc.params) for sc in a] == [10, 20, 30, 50, 70, 100]
    for sc in a:
        for s in sc.params:
            assert 1.0 <= s.alpha <= 10.0
            assert 0.5 <= s.p <= 1.0
            assert (2 <= s.L <= 5) or (20 <= s.L <= 100)


def test_fig_stride():
    assert len(scenario_fig(3, horizon=100, replications=1, stride=2)) == 9
    with pytest.raises(ConfigurationError):
        scenario_fig(7)


def test_table1_sim_shapes():
    for label, schedule in table1_policies():
        cfg = table1_sim_for(schedule)
        window = cfg.horizon - cfg.warmup
        assert window >= 10**5
        assert window % schedule.period == 0
        assert cfg.warmup % schedule.period == 0
        assert cfg.warmup >= 600
    assert set(TABLE1_TARGETS) == {
        "no_switching",
        "switch_twice",
        "switch_10",
        "round_robin",
    }


def _tiny_results():
    cfg = """
scenarios:
  - id: a
    sources:
      - {alpha: 1.0, p: 0.9, L: 2}
      - {alpha: 2.0, p: 0.7, L: 1}
    policies:
      - {kind: greedy}
      - {kind: mwl1}
      - {kind: srp, mu: [0.5, 0.5]}
    sim: {T: 2000, warmup: 20, seed: 4, replications: 5}
  - id: b
    sources:
      - {alpha: 1.0, p: 0.9, L: 3}
      - {alpha: 1.0, p: 0.7, L: 1}
    policies:
      - {kind: greedy}
      - {kind: mwl1}
      - {kind: srp, mu: [0.5, 0.5]}
    sim: {T: 2000, warmup: 20, seed: 4, replications: 5}
"""
    return run_scenarios(parse_config(cfg))


def test_emit_csv_contract(tmp_path):
    results = _tiny_results()
    per_source, summary = emit_csv(results, tmp_path)

    text = per_source.read_text()
    lines = text.split("\n")
    assert lines[0] == PER_SOURCE_HEADER
    assert text.endswith("\n")
    # 2 scenarios x 3 policies x 5 replications x 2 sources
    assert len([l for l in lines[1:] if l]) == 2 * 3 * 5 * 2

    stext = summary.read_text()
    slines = stext.split("\n")
    assert slines[0] == SUMMARY_HEADER
    assert len([l for l in slines[1:] if l]) == 2 * 3

    with open(summary) as f:
        rows = list(csv.DictReader(f))
    for row, res in zip(rows, results):
        mean = float(row["ewsaoi_mean"])
        lb = float(row["lower_bound"])
        ratio = float(row["ratio_to_bound"])
        # full round-trip precision (12 significant digits and beyond)
        assert mean == res.summary.ewsaoi_mean
        assert ratio == mean / lb
        # lower-bound dominance surfaces at the report layer
        ci = float(row["ewsaoi_ci95"])
        assert ratio >= 1.0 - 3.0 * (ci / lb)


def test_emit_csv_empty(tmp_path):
    per_source, summary = emit_csv([], tmp_path)
    assert per_source.read_text() == PER_SOURCE_HEADER + "\n"
    assert summary.read_text() == SUMMARY_HEADER + "\n"


def test_analyze_report_cells():
    cfg = """
scenarios:
  - id: sym
    sources:
      - {alpha: 1.0, p: 0.5, L: 2}
      - {alpha: 1.0, p: 0.5, L: 2}
    policies:
      - {kind: srp, mu: [0.5, 0.5]}
      - {kind: nsrp, mu: [0.5, 0.5]}
      - {kind: greedy}
    sim: {T: 1000, seed: 0}
"""
    scenarios = parse_config(cfg)
    report = format_analyze_report(scenarios)
    assert "ewsaoi=11" in report  # switching closed form
    assert "ewsaoi=10" in report  # no-switching closed form (wins, Corollary)
    assert "simulation-only" in report


def test_analyze_csv(tmp_path):
    scenarios = parse_config(MINIMAL)
    path = analyze_csv(scenarios, tmp_path)
    with open(path) as f:
        rows = list(csv.DictReader(f))
    assert rows[0]["scenario"] == "tiny"
    assert rows[0]["closed_form_ewsaoi"] == ""  # greedy: simulation-only
    assert float(rows[0]["lower_bound"]) == pytest.approx(1.5)
