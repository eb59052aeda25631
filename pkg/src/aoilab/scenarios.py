"""Scenario construction: YAML config parsing and the built-in benchmark
scenario families (reliability sweep, update-length sweep, priority sweep,
network-size sweep, and the deterministic two-source schedule table).

Config schema (YAML)::

    scenarios:
      - id: demo
        sources:                     # one entry per source
          - {alpha: 1.0, p: 0.5, L: 2}
        policies:                    # any of the six families
          - {kind: srp, mu: optimal}         # or mu: [0.6, 0.4]
          - {kind: nsrp, mu: optimal}
          - {kind: greedy}
          - {kind: mwl1}
          - {kind: max_weight}               # optional: variant, beta, gamma, V, q_bar
          - {kind: fixed, assignment: [0, 1, null]}   # null = idle slot
        sim: {T: 100000, warmup: 1000, seed: 1, replications: 3, mode: refresh}
        sweep: {parameter: p, values: [0.2, 0.4, 0.6]}   # optional

A sweep materializes one scenario instance per value; p/alpha/L apply to all
sources, T to the simulation. Policies with mu: optimal are resolved after
the sweep value is applied (the optimum depends on it).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .analysis import optimal_srp
from .errors import ConfigurationError
from .model import GenerationMode, SourceParams
from .optimizer import optimize_nsrp
from .policies import (
    FixedSchedule,
    Greedy,
    MaxWeight,
    Mwl1,
    Nsrp,
    PolicySpec,
    Srp,
    mw_default_config,
    table1_schedules,
)
from .simulation import SimConfig


@dataclass(frozen=True)
class Scenario:
    """One materialized experiment: a network, labelled policies, and a
    simulation configuration."""

    id: str
    params: Tuple[SourceParams, ...]
    policies: Tuple[Tuple[str, PolicySpec], ...]
    sim: SimConfig


_SWEEPABLE = ("p", "alpha", "L", "T")


def _err(path: str, msg: str) -> ConfigurationError:
    return ConfigurationError(f"{path}: {msg}")


def _parse_sources(raw, path: str) -> List[SourceParams]:
    if not isinstance(raw, list) or not raw:
        raise _err(path, "must be a non-empty list")
    out = []
    for k, item in enumerate(raw):
        spath = f"{path}[{k}]"
        if not isinstance(item, dict):
            raise _err(spath, "must be a mapping with alpha/p/L")
        for fld in ("alpha", "p", "L"):
            if fld not in item:
                raise _err(f"{spath}.{fld}", "missing")
        try:
            out.append(SourceParams(float(item["alpha"]), float(item["p"]), int(item["L"])))
        except ConfigurationError as exc:
            raise _err(spath, str(exc)) from exc
    return out


def _parse_sim(raw, path: str) -> SimConfig:
    if not isinstance(raw, dict):
        raise _err(path, "must be a mapping")
    if "T" not in raw:
        raise _err(f"{path}.T", "missing")
    mode = GenerationMode.parse(str(raw.get("mode", "refresh")))
    try:
        return SimConfig(
            horizon=int(raw["T"]),
            warmup=int(raw["warmup"]) if "warmup" in raw else None,
            seed=int(raw.get("seed", 0)),
            mode=mode,
            replications=int(raw.get("replications", 1)),
        )
    except ConfigurationError as exc:
        raise _err(path, str(exc)) from exc


def _resolve_policy(raw, params: Sequence[SourceParams], path: str) -> Tuple[str, PolicySpec]:
    if not isinstance(raw, dict) or "kind" not in raw:
        raise _err(path, "must be a mapping with a 'kind' field")
    kind = raw["kind"]
    n = len(params)
    try:
        if kind in ("srp", "nsrp"):
            mu = raw.get("mu", "optimal")
            if mu == "optimal":
                vec = optimal_srp(params) if kind == "srp" else optimize_nsrp(params)
                label = f"{kind}_opt"
            elif mu == "uniform":
                vec = np.full(n, 1.0 / n)
                label = f"{kind}_uniform"
            else:
                vec = np.asarray(mu, dtype=np.float64)
                if vec.shape != (n,):
                    raise _err(f"{path}.mu", f"needs {n} entries")
                label = kind
            spec = Srp(tuple(vec)) if kind == "srp" else Nsrp(tuple(vec))
        elif kind == "greedy":
            spec, label = Greedy(), "greedy"
        elif kind == "mwl1":
            spec, label = Mwl1(), "mwl1"
        elif kind == "max_weight":
            if any(f in raw for f in ("beta", "gamma", "V", "q_bar")):
                for fld in ("beta", "gamma", "V", "q_bar"):
                    if fld not in raw:
                        raise _err(f"{path}.{fld}", "missing (explicit max_weight needs all four)")
                spec = MaxWeight(
                    beta=tuple(raw["beta"]),
                    gamma=tuple(raw["gamma"]),
                    V=float(raw["V"]),
                    q_bar=tuple(raw["q_bar"]),
                    weight_index_by_p=bool(raw.get("weight_index_by_p", True)),
                )
            else:
                spec = mw_default_config(
                    params,
                    variant=raw.get("variant", "service_scaled"),
                    weight_index_by_p=bool(raw.get("weight_index_by_p", True)),
                )
            label = "max_weight"
        elif kind == "fixed":
            if "assignment" not in raw:
                raise _err(f"{path}.assignment", "missing")
            assignment = tuple(None if a is None else int(a) for a in raw["assignment"])
            for k, a in enumerate(assignment):
                if a is not None and a >= n:
                    raise _err(f"{path}.assignment[{k}]", f"source {a} out of range [0, {n})")
            spec, label = FixedSchedule(assignment), "fixed"
        else:
            raise _err(f"{path}.kind", f"unknown policy kind {kind!r}")
    except ConfigurationError:
        raise
    return (str(raw.get("label", label)), spec)


def _apply_sweep_value(sources, sim, parameter, value, path):
    if parameter == "T":
        return sources, replace(sim, horizon=int(value))
    try:
        if parameter == "p":
            sources = [SourceParams(s.alpha, float(value), s.L) for s in sources]
        elif parameter == "alpha":
            sources = [SourceParams(float(value), s.p, s.L) for s in sources]
        elif parameter == "L":
            sources = [SourceParams(s.alpha, s.p, int(value)) for s in sources]
    except ConfigurationError as exc:
        raise _err(path, f"sweep value {value!r} invalid: {exc}") from exc
    return sources, sim


def parse_config(text: str) -> List[Scenario]:
    """Parse and materialize scenarios from YAML text; all invariants are
    enforced here, with field-level context on errors."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"not valid YAML: {exc}") from exc
    if not isinstance(doc, dict) or "scenarios" not in doc:
        raise ConfigurationError("top level must be a mapping with a 'scenarios' list")
    raw_scenarios = doc["scenarios"]
    if not isinstance(raw_scenarios, list) or not raw_scenarios:
        raise ConfigurationError("scenarios: must be a non-empty list")

    out: List[Scenario] = []
    seen = set()
    for k, raw in enumerate(raw_scenarios):
        path = f"scenarios[{k}]"
        if not isinstance(raw, dict):
            raise _err(path, "must be a mapping")
        sid = str(raw.get("id", f"scenario{k}"))
        base_sources = _parse_sources(raw.get("sources"), f"{path}.sources")
        base_sim = _parse_sim(raw.get("sim"), f"{path}.sim")
        if not isinstance(raw.get("policies"), list) or not raw["policies"]:
            raise _err(f"{path}.policies", "must be a non-empty list")

        if "sweep" in raw:
            sweep = raw["sweep"]
            if not isinstance(sweep, dict) or "parameter" not in sweep or "values" not in sweep:
                raise _err(f"{path}.sweep", "needs 'parameter' and 'values'")
            parameter = sweep["parameter"]
            if parameter not in _SWEEPABLE:
                raise _err(f"{path}.sweep.parameter", f"must be one of {_SWEEPABLE}")
            values = sweep["values"]
            if not isinstance(values, list) or not values:
                raise _err(f"{path}.sweep.values", "must be a non-empty list")
            instances = [
                (f"{sid}[{parameter}={value:g}]" if isinstance(value, float)
                 else f"{sid}[{parameter}={value}]", parameter, value)
                for value in values
            ]
        else:
            instances = [(sid, None, None)]

        for inst_id, parameter, value in instances:
            if inst_id in seen:
                raise _err(path, f"duplicate scenario id {inst_id!r}")
            seen.add(inst_id)
            sources, sim = base_sources, base_sim
            if parameter is not None:
                sources, sim = _apply_sweep_value(
                    sources, sim, parameter, value, f"{path}.sweep"
                )
            policies = tuple(
                _resolve_policy(p, sources, f"{path}.policies[{j}]")
                for j, p in enumerate(raw["policies"])
            )
            out.append(Scenario(id=inst_id, params=tuple(sources), policies=policies, sim=sim))
    return out


@lru_cache(maxsize=256)
def _standard_policies(params: Tuple[SourceParams, ...]) -> Tuple[Tuple[str, PolicySpec], ...]:
    """The five policy families every benchmark figure compares. Cached: the
    no-switching optimum is the expensive part and grids revisit networks."""
    return (
        ("srp_opt", Srp(tuple(optimal_srp(params)))),
        ("nsrp_opt", Nsrp(tuple(optimize_nsrp(params)))),
        ("greedy", Greedy()),
        ("mwl1", Mwl1()),
        ("max_weight", mw_default_config(params)),
    )


def _two_class(p1: float, p2: float, alpha1: float, alpha2: float, L1: int, L2s) -> List[SourceParams]:
    cls1 = [SourceParams(alpha1, p1, L1) for _ in range(5)]
    cls2 = [SourceParams(alpha2, p2, int(l)) for l in L2s]
    return cls1 + cls2


def scenario_fig(
    n: int,
    seed: int = 0,
    horizon: Optional[int] = None,
    replications: int = 5,
    stride: int = 1,
) -> List[Scenario]:
    """Built-in benchmark grids mirroring the evaluation figures.

    3: two fixed classes, per-slot reliability swept over 0.20..1.00 step 0.05.
    4: class-2 update lengths [L*-2 .. L*+2] with L* in 15..100 step 5.
    5: class-1 priority swept over 2..20 step 2.
    6: network size N in {10, 20, 30, 50, 70, 100} with randomized sources
       (weights U[1,10], reliabilities U[0.5,1], class fair-coin, class-1
       lengths U{2..5}, class-2 U{20..100}), deterministic given the seed.

    stride subsamples the sweep (every stride-th point), for desk-scale runs.
    """
    scenarios: List[Scenario] = []
    if n == 3:
        p_values = [round(0.20 + 0.05 * k, 2) for k in range(17)][::stride]
        for p in p_values:
            params = tuple(_two_class(p, p, 5.0, 1.0, 2, [50] * 5))
            sim = SimConfig(horizon=horizon or 10**6, seed=seed, replications=replications)
            scenarios.append(
                Scenario(
                    id=f"fig3[p={p:.2f}]",
                    params=params,
                    policies=_standard_policies(params),
                    sim=sim,
                )
            )
    elif n == 4:
        l_stars = list(range(15, 101, 5))[::stride]
        for l_star in l_stars:
            params = tuple(_two_class(0.8, 0.4, 5.0, 1.0, 2, range(l_star - 2, l_star + 3)))
            sim = SimConfig(horizon=horizon or 10**6, seed=seed, replications=replications)
            scenarios.append(
                Scenario(
                    id=f"fig4[Lstar={l_star}]",
                    params=params,
                    policies=_standard_policies(params),
                    sim=sim,
                )
            )
    elif n == 5:
        alphas = list(range(2, 21, 2))[::stride]
        for a in alphas:
            params = tuple(_two_class(0.8, 0.4, float(a), 1.0, 2, [50] * 5))
            sim = SimConfig(horizon=horizon or 10**6, seed=seed, replications=replications)
            scenarios.append(
                Scenario(
                    id=f"fig5[alpha1={a}]",
                    params=params,
                    policies=_standard_policies(params),
                    sim=sim,
                )
            )
    elif n == 6:
        rng = np.random.default_rng(seed)
        for size in [10, 20, 30, 50, 70, 100][::stride]:
            params = []
            for _ in range(size):
                alpha = float(rng.uniform(1.0, 10.0))
                p = float(rng.uniform(0.5, 1.0))
                if rng.random() < 0.5:
                    L = int(rng.integers(2, 6))
                else:
                    L = int(rng.integers(20, 101))
                params.append(SourceParams(alpha, p, L))
            params = tuple(params)
            default_T = 2 * 10**6 if size == 100 else 10**6
            sim = SimConfig(horizon=horizon or default_T, seed=seed, replications=replications)
            scenarios.append(
                Scenario(
                    id=f"fig6[N={size}]",
                    params=params,
                    policies=_standard_policies(params),
                    sim=sim,
                )
            )
    else:
        raise ConfigurationError(f"figure index must be 3..6, got {n}")
    return scenarios


TABLE1_PARAMS = (SourceParams(1.0, 1.0, 100), SourceParams(1.0, 1.0, 2))
TABLE1_LABELS = ("no_switching", "switch_twice", "switch_10", "round_robin")
TABLE1_TARGETS = {
    "no_switching": 154.0,
    "switch_twice": 118.0,
    "switch_10": 99.0,
    "round_robin": 153.25,
}
TABLE1_TOLERANCE = 1.5


def table1_policies() -> Tuple[Tuple[str, FixedSchedule], ...]:
    """The four labelled deterministic schedules of the two-source benchmark
    (L=(100,2), reliable channels, equal weights, hold-until-delivery)."""
    return tuple(zip(TABLE1_LABELS, table1_schedules(100, 2)))


def table1_sim_for(schedule: FixedSchedule, min_horizon: int = 10**5) -> SimConfig:
    """Per-schedule simulation shape: a whole number of periods, at least
    1020 periods and min_horizon slots after the warm-up, so the measured
    average is the exact periodic steady-state value.

    The warm-up spans whole periods and at least 600 slots (the slowest
    cold-start transient lasts one full large-update cycle, ~200 slots).
    """
    period = schedule.period
    periods = max(1020, -(-min_horizon // period))
    warm_periods = max(20, -(-600 // period))
    return SimConfig(
        horizon=(periods + warm_periods) * period,
        warmup=warm_periods * period,
        seed=0,
        mode=GenerationMode.HOLD_UNTIL_DELIVERY,
        replications=1,
    )
