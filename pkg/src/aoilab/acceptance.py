"""Self-validation suite.

Each criterion function runs one exit check of the artifact at its pinned
tolerance and returns a CriterionResult; run_all executes the full suite.
Everything needed (grid-search oracles, closed-form references, simulation
grids) is constructed here, so the suite is self-contained. The heavy
benchmark grids are computed once per process and shared across criteria.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Tuple

import numpy as np

from .analysis import (
    lower_bound,
    nsrp_ewsaoi,
    nsrp_moments,
    optimal_srp,
    optimal_srp_ewsaoi,
    rho_srp,
    srp_ewsaoi,
)
from .model import SourceParams
from .optimizer import optimize_nsrp
from .policies import (
    FixedSchedule,
    Greedy,
    Mwl1,
    Nsrp,
    Srp,
    mw_default_config,
)
from .scenarios import (
    TABLE1_PARAMS,
    TABLE1_TARGETS,
    TABLE1_TOLERANCE,
    scenario_fig,
    table1_policies,
    table1_sim_for,
)
from .simulation import ReplicationSummary, SimConfig, run_episode, run_replications, reconstruct_prop1

GRID_REPLICATIONS = 5
GRID_HORIZON = 10**6
GRID_SEED = 20240901


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: str
    elapsed: float

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.cid:2d} {self.name} ({self.elapsed:.1f}s): {self.detail}"


def _warm_kernel() -> None:
    """One tiny episode so JIT compilation never lands inside a timed check."""
    run_episode(
        [SourceParams(1.0, 1.0, 1)],
        Greedy(),
        SimConfig(horizon=16, warmup=0, seed=0),
        collect_cycles=False,
    )


Cell = Dict[str, ReplicationSummary]


@lru_cache(maxsize=None)
def fig_grid(fig: int, stride: int = 1) -> Dict[str, Tuple[tuple, Cell]]:
    """Simulated benchmark grid: scenario id -> (params, {policy: summary})."""
    _warm_kernel()
    out: Dict[str, Tuple[tuple, Cell]] = {}
    for sc in scenario_fig(
        fig, seed=GRID_SEED, horizon=GRID_HORIZON, replications=GRID_REPLICATIONS, stride=stride
    ):
        cell: Cell = {}
        for label, spec in sc.policies:
            cell[label] = run_replications(sc.params, spec, sc.sim, collect_cycles=False)
        out[sc.id] = (sc.params, cell)
    return out


def criterion_1_table1() -> CriterionResult:
    """Deterministic two-source schedule table within +/-1.5, under 5 s."""
    _warm_kernel()
    t0 = time.perf_counter()
    measured = {}
    for label, schedule in table1_policies():
        cfg = table1_sim_for(schedule)
        m = run_episode(TABLE1_PARAMS, schedule, cfg, collect_cycles=False)
        measured[label] = m.ewsaoi
    elapsed = time.perf_counter() - t0
    errs = {k: abs(measured[k] - TABLE1_TARGETS[k]) for k in TABLE1_TARGETS}
    ok = all(e <= TABLE1_TOLERANCE for e in errs.values()) and elapsed < 5.0
    detail = (
        ", ".join(f"{k}={measured[k]:.2f} (target {TABLE1_TARGETS[k]})" for k in measured)
        + f"; runtime {elapsed:.2f}s"
    )
    return CriterionResult(1, "table of deterministic schedules", ok, detail, elapsed)


def criterion_2_srp_closed_form() -> CriterionResult:
    """Simulated switching-policy age within 1% of the closed form, < 2 min."""
    _warm_kernel()
    t0 = time.perf_counter()
    configs = [
        ("single p=0.5 L=1", [SourceParams(1.0, 0.5, 1)], np.array([1.0])),
        (
            "symmetric N=2 L=2 p=0.5",
            [SourceParams(1.0, 0.5, 2), SourceParams(1.0, 0.5, 2)],
            None,
        ),
        (
            "asymmetric alpha=(1,10) L=(30,2)",
            [SourceParams(1.0, 0.5, 30), SourceParams(10.0, 0.5, 2)],
            None,
        ),
    ]
    details = []
    ok = True
    for name, params, mu in configs:
        mu = optimal_srp(params) if mu is None else mu
        predicted = srp_ewsaoi(params, mu)
        cfg = SimConfig(horizon=2 * 10**6, seed=11, replications=5)
        s = run_replications(params, Srp(tuple(mu)), cfg)
        rel = abs(s.ewsaoi_mean - predicted) / predicted
        ok = ok and rel <= 0.01
        details.append(f"{name}: sim {s.ewsaoi_mean:.4f} vs {predicted:.4f} ({rel:.2%})")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 120.0
    return CriterionResult(
        2, "switching-policy closed form", ok, "; ".join(details) + f"; {elapsed:.0f}s", elapsed
    )


def criterion_3_nsrp_closed_form() -> CriterionResult:
    """No-switching moments within 2%, corrected age within 2%, and the
    as-printed variant provably biased on the single-source case."""
    _warm_kernel()
    t0 = time.perf_counter()
    details = []
    ok = True
    cases = [
        (
            "symmetric N=2 L=2 p=0.5",
            [SourceParams(1.0, 0.5, 2), SourceParams(1.0, 0.5, 2)],
            np.array([0.5, 0.5]),
        ),
        (
            "asymmetric",
            [SourceParams(2.0, 0.8, 5), SourceParams(1.0, 0.4, 2)],
            np.array([0.4, 0.6]),
        ),
    ]
    for name, params, mu in cases:
        cfg = SimConfig(horizon=2 * 10**6, seed=23, replications=5)
        s = run_replications(params, Nsrp(tuple(mu)), cfg)
        predicted = nsrp_ewsaoi(params, mu, corrected=True)
        rel_age = abs(s.ewsaoi_mean - predicted) / predicted
        ok = ok and rel_age <= 0.02
        details.append(f"{name}: age {s.ewsaoi_mean:.3f} vs {predicted:.3f} ({rel_age:.2%})")
        for i in range(len(params)):
            mom = nsrp_moments(params, mu, i)
            cnt = sum(float(m.cycle_count[i]) for m in s.episodes)
            ew = sum(float(m.sum_w[i]) for m in s.episodes) / cnt
            ew2 = sum(float(m.sum_w2[i]) for m in s.episodes) / cnt
            es2 = sum(float(m.sum_s2[i]) for m in s.episodes) / cnt
            for label, sim_v, ref in (
                ("E[W]", ew, mom.e_w),
                ("E[W2]", ew2, mom.e_w2),
                ("E[S2]", es2, mom.e_s2),
            ):
                if ref == 0.0:
                    rel = abs(sim_v - ref)
                else:
                    rel = abs(sim_v - ref) / ref
                if rel > 0.02:
                    ok = False
                    details.append(f"{name} src{i} {label}: {sim_v:.3f} vs {ref:.3f} ({rel:.2%})")

    # the printed constant understates the single-source truth: assert the gap
    single = [SourceParams(1.0, 1.0, 1)]
    printed = nsrp_ewsaoi(single, [1.0], corrected=False)
    sim = run_episode(single, Nsrp((1.0,)), SimConfig(horizon=10**5, seed=3), collect_cycles=False)
    gap_ok = abs(printed - 1.5) < 1e-12 and abs(sim.ewsaoi - 2.0) < 1e-12
    ok = ok and gap_ok
    details.append(f"as-printed single-source: {printed:.2f} vs simulated {sim.ewsaoi:.2f}")
    elapsed = time.perf_counter() - t0
    return CriterionResult(
        3, "no-switching closed form", ok, "; ".join(details), elapsed
    )


def criterion_4_lower_bound_dominance() -> CriterionResult:
    """Every (reliability, policy) cell of the fig-3 grid respects the bound."""
    t0 = time.perf_counter()
    grid = fig_grid(3)
    worst = np.inf
    bad = []
    for sid, (params, cell) in grid.items():
        lb = lower_bound(params)
        for label, summary in cell.items():
            slack = (summary.ewsaoi_mean + 3.0 * summary.ewsaoi_stderr) / lb
            worst = min(worst, slack)
            if summary.ewsaoi_mean + 3.0 * summary.ewsaoi_stderr < lb:
                bad.append(f"{sid}/{label}")
    ok = not bad
    detail = f"{len(grid) * 5} cells, min (mean+3se)/bound = {worst:.4f}" + (
        f"; violations: {bad}" if bad else ""
    )
    return CriterionResult(4, "lower-bound dominance", ok, detail, time.perf_counter() - t0)


def _random_configs(count: int, seed: int, symmetric: bool) -> List[List[SourceParams]]:
    rng = np.random.default_rng(seed)
    configs = []
    for _ in range(count):
        if symmetric:
            n = int(rng.integers(2, 13))
            a = float(rng.uniform(0.5, 10.0))
            p = float(rng.uniform(0.1, 1.0))
            L = int(rng.integers(1, 101))
            configs.append([SourceParams(a, p, L)] * n)
        else:
            n = int(rng.integers(1, 21))
            configs.append(
                [
                    SourceParams(
                        float(rng.uniform(0.5, 10.0)),
                        float(rng.uniform(0.1, 1.0)),
                        int(rng.integers(1, 101)),
                    )
                    for _ in range(n)
                ]
            )
    return configs


def criterion_5_srp_sandwich() -> CriterionResult:
    """Closed-form sandwich bound and ratio range over 100 random networks."""
    t0 = time.perf_counter()
    ok = True
    worst_lo, worst_hi = np.inf, 0.0
    for params in _random_configs(100, seed=5150, symmetric=False):
        lb = lower_bound(params)
        opt = optimal_srp_ewsaoi(params)
        rho = rho_srp(params)
        worst_lo, worst_hi = min(worst_lo, rho), max(worst_hi, rho)
        if not (lb <= opt * (1 + 1e-12) and opt <= rho * lb * (1 + 1e-12)):
            ok = False
        if not (1.0 < rho < 3.0):
            ok = False
    detail = f"rho_s range over 100 configs: [{worst_lo:.4f}, {worst_hi:.4f}]"
    return CriterionResult(5, "optimal-switching sandwich", ok, detail, time.perf_counter() - t0)


def criterion_6_no_switching_wins_symmetric() -> CriterionResult:
    """Symmetric networks: no-switching (uniform) never loses to switching."""
    t0 = time.perf_counter()
    ok = True
    worst = -np.inf
    for params in _random_configs(50, seed=606, symmetric=True):
        n = len(params)
        uniform = np.full(n, 1.0 / n)
        ns = nsrp_ewsaoi(params, uniform, corrected=True)
        s = optimal_srp_ewsaoi(params)
        worst = max(worst, (ns - s) / s)
        if ns > s * (1 + 1e-12):
            ok = False
    detail = f"max (nsrp-srp)/srp over 50 symmetric configs: {worst:.3e}"
    return CriterionResult(6, "no-switching wins in symmetric nets", ok, detail, time.perf_counter() - t0)


def _ci_overlap_ok(mw: ReplicationSummary, other: ReplicationSummary) -> bool:
    slack = 1.96 * (mw.ewsaoi_stderr + other.ewsaoi_stderr)
    return mw.ewsaoi_mean <= other.ewsaoi_mean + slack


def criterion_7_mw_dominance() -> CriterionResult:
    """Max-weight beats both optimal randomized policies in every desk cell
    of the three benchmark grids (within overlapping-CI slack)."""
    t0 = time.perf_counter()
    bad = []
    margins = []
    cells = 0
    for fig, stride in ((3, 2), (4, 2), (5, 2)):
        grid = fig_grid(fig, stride=stride)
        for sid, (_params, cell) in grid.items():
            mw = cell["max_weight"]
            cells += 1
            for other in ("srp_opt", "nsrp_opt"):
                margins.append(cell[other].ewsaoi_mean / mw.ewsaoi_mean)
                if not _ci_overlap_ok(mw, cell[other]):
                    bad.append(f"{sid} vs {other}")
    ok = not bad
    detail = f"{cells} cells; min other/mw ratio {min(margins):.3f}" + (
        f"; violations: {bad}" if bad else ""
    )
    return CriterionResult(7, "max-weight dominance", ok, detail, time.perf_counter() - t0)


def criterion_8_mw_vs_mwl1() -> CriterionResult:
    """At reliability 0.4 on the fig-3 grid, max-weight improves on the
    single-packet baseline by at least 20%."""
    t0 = time.perf_counter()
    grid = fig_grid(3)
    params, cell = grid["fig3[p=0.40]"]
    mw = cell["max_weight"].ewsaoi_mean
    mwl1 = cell["mwl1"].ewsaoi_mean
    improvement = 1.0 - mw / mwl1
    ok = improvement >= 0.20
    detail = f"mw {mw:.1f} vs mwl1 {mwl1:.1f}: improvement {improvement:.1%}"
    return CriterionResult(8, "max-weight vs single-packet baseline", ok, detail, time.perf_counter() - t0)


def criterion_9_mw_throughput() -> CriterionResult:
    """Max-weight meets its per-source throughput targets on the fig-3 grid.

    Throughput is the steady-state (post-warm-up) rate: the debt controller
    spends the first few hundred slots ramping its debt to the operating
    level, and that burn-in is a transient, not a property of the long-term
    rate the guarantee speaks about. Ten replications per cell: per-episode
    rates are controller-tight with occasional truncation excursions, and a
    five-sample standard error underestimates that tail.
    """
    t0 = time.perf_counter()
    _warm_kernel()
    bad = []
    worst = np.inf
    for sc in scenario_fig(3, seed=GRID_SEED, horizon=GRID_HORIZON, replications=10):
        params = sc.params
        spec = mw_default_config(list(params))
        mw = run_replications(params, spec, sc.sim, collect_cycles=False)
        q_bar = np.asarray(spec.q_bar)
        slack = mw.throughput_window_mean - (q_bar - 3.0 * mw.throughput_window_stderr)
        worst = min(worst, float((slack / q_bar).min()))
        if np.any(slack < 0):
            bad.append(sc.id)
    ok = not bad
    detail = f"min (q - (qbar-3se))/qbar = {worst:.5f}" + (f"; violations: {bad}" if bad else "")
    return CriterionResult(9, "max-weight throughput targets", ok, detail, time.perf_counter() - t0)


def criterion_10_index_ordering() -> CriterionResult:
    """Zero scheduling-index ordering violations across completed updates."""
    _warm_kernel()
    t0 = time.perf_counter()
    params = [
        SourceParams(1.0, 0.9, 1),
        SourceParams(2.0, 0.7, 2),
        SourceParams(1.0, 0.5, 10),
        SourceParams(3.0, 0.8, 25),
        SourceParams(1.0, 0.6, 50),
    ]
    spec = mw_default_config(params)
    m = run_episode(params, spec, SimConfig(horizon=10**6, seed=77), collect_cycles=False)
    ok = m.mw_order_violations == 0
    detail = f"violations over T=1e6: {m.mw_order_violations} (updates: {int(m.updates.sum())})"
    return CriterionResult(10, "index ordering along updates", ok, detail, time.perf_counter() - t0)


def criterion_11_cycle_reconstruction() -> CriterionResult:
    """Cycle-statistics reconstruction agrees with the direct average for
    every policy family on the reference network."""
    _warm_kernel()
    t0 = time.perf_counter()
    params = [SourceParams(1.0, 0.8, 1), SourceParams(2.0, 0.5, 5), SourceParams(1.0, 0.9, 20)]
    policies = [
        ("srp_opt", Srp(tuple(optimal_srp(params)))),
        ("nsrp_uniform", Nsrp((1 / 3, 1 / 3, 1 / 3))),
        ("greedy", Greedy()),
        ("mwl1", Mwl1()),
        ("max_weight", mw_default_config(params)),
        ("fixed_rr", FixedSchedule((0, 1, 2))),
    ]
    cfg = SimConfig(horizon=10**6, warmup=0, seed=41)
    ok = True
    details = []
    for label, spec in policies:
        m = run_episode(params, spec, cfg, collect_cycles=False)
        rebuilt = reconstruct_prop1(m, params)
        rel = abs(rebuilt - m.ewsaoi) / m.ewsaoi
        details.append(f"{label} {rel:.3%}")
        ok = ok and rel <= 0.005
    return CriterionResult(
        11, "cycle-statistics reconstruction", ok, "; ".join(details), time.perf_counter() - t0
    )


def criterion_12_optimizer_vs_grid() -> CriterionResult:
    """Solver output matches a 1e-4-step grid search on two-source networks."""
    t0 = time.perf_counter()
    from .analysis import _nsrp_ewsaoi_arrays
    from .model import params_arrays

    configs = [
        [SourceParams(1.0, 0.5, 30), SourceParams(10.0, 0.5, 2)],
        [SourceParams(1.0, 0.5, 2), SourceParams(1.0, 0.5, 2)],
        [SourceParams(5.0, 0.8, 2), SourceParams(1.0, 0.4, 50)],
    ]
    ok = True
    details = []
    for params in configs:
        alpha, p, L = params_arrays(params)
        grid = np.arange(0.001, 0.9991, 1e-4)
        vals = np.array(
            [_nsrp_ewsaoi_arrays(alpha, p, L, np.array([m, 1.0 - m]), True) for m in grid]
        )
        k = int(np.argmin(vals))
        mu_grid = np.array([grid[k], 1.0 - grid[k]])
        f_grid = float(vals[k])
        mu_opt = optimize_nsrp(params)
        f_opt = nsrp_ewsaoi(params, mu_opt, corrected=True)
        d_mu = float(np.max(np.abs(mu_opt - mu_grid)))
        d_f = abs(f_opt - f_grid) / f_grid
        details.append(f"dmu={d_mu:.2e} df={d_f:.2e}")
        ok = ok and d_mu <= 1e-3 and d_f <= 1e-6 + 1e-15
    return CriterionResult(
        12, "optimizer matches grid search", ok, "; ".join(details), time.perf_counter() - t0
    )


ALL_CRITERIA: List[Callable[[], CriterionResult]] = [
    criterion_1_table1,
    criterion_2_srp_closed_form,
    criterion_3_nsrp_closed_form,
    criterion_4_lower_bound_dominance,
    criterion_5_srp_sandwich,
    criterion_6_no_switching_wins_symmetric,
    criterion_7_mw_dominance,
    criterion_8_mw_vs_mwl1,
    criterion_9_mw_throughput,
    criterion_10_index_ordering,
    criterion_11_cycle_reconstruction,
    criterion_12_optimizer_vs_grid,
]


def run_all(echo: bool = True) -> List[CriterionResult]:
    results = []
    for fn in ALL_CRITERIA:
        res = fn()
        results.append(res)
        if echo:
            print(res.line, flush=True)
    return results
