"""Episode driver: runs a policy against the slot dynamics with reproducible
randomness, warm-up handling, cycle bookkeeping, and replication statistics.

Two interchangeable engines execute an episode: a compiled kernel
(:mod:`aoilab._kernel`, default) and a pure-Python reference path built
directly on :func:`aoilab.model.advance_slot` and the policy decide
functions. Both consume identical Philox streams, so they produce bit-equal
metrics; the test suite holds them to that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import rng
from .errors import ConfigurationError, InvariantError
from .model import (
    DeliveryKind,
    GenerationMode,
    SourceParams,
    advance_slot,
    init_state,
    params_arrays,
)
from .policies import (
    FixedSchedule,
    Greedy,
    MaxWeight,
    Mwl1,
    Nsrp,
    PolicySpec,
    Srp,
    mw_index,
    nsrp_decide,
    srp_decide,
    greedy_decide,
    mwl1_decide,
    mw_decide,
    fixed_schedule_decide,
)

try:
    from . import _kernel

    _HAVE_KERNEL = True
except ImportError:  # pragma: no cover - numba missing
    _kernel = None
    _HAVE_KERNEL = False


@dataclass(frozen=True)
class SimConfig:
    """One episode's shape: horizon, warm-up discarded from averages, base
    seed, update-generation mode, and replication count.

    warmup=None resolves to 1% of the horizon.
    """

    horizon: int
    warmup: Optional[int] = None
    seed: int = 0
    mode: GenerationMode = GenerationMode.REFRESH
    replications: int = 1

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")
        if self.warmup is None:
            object.__setattr__(self, "warmup", self.horizon // 100)
        if not 0 <= self.warmup < self.horizon:
            raise ConfigurationError(
                f"need horizon > warmup >= 0, got horizon={self.horizon} warmup={self.warmup}"
            )
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")


@dataclass
class Metrics:
    """Outputs of one episode.

    ewsaoi is the weighted mean age over the measurement window
    (warmup+1 .. T). throughput counts packet deliveries over the full
    horizon; throughput_window counts only measurement-window deliveries
    (the steady-state rate, free of the debt controller's burn-in ramp). Cycle statistics (waiting time W, service time S per completed
    update) are kept as running sums always, and as raw per-update samples
    when the episode was run with collect_cycles. mw_order_violations counts
    successful packets of an update whose scheduling index exceeded the
    index at the update's last packet (max-weight runs only; each source's
    cold-start update is excluded, matching the steady-state claim).
    """

    ewsaoi: float
    mean_h: np.ndarray
    throughput: np.ndarray
    throughput_window: np.ndarray
    deliveries: np.ndarray
    updates: np.ndarray
    cycle_count: np.ndarray
    sum_w: np.ndarray
    sum_w2: np.ndarray
    sum_s: np.ndarray
    sum_s2: np.ndarray
    sum_ws: np.ndarray
    sum_ws2: np.ndarray
    sum_spws: np.ndarray
    mw_order_violations: int
    debt_max: np.ndarray
    waits: Optional[List[np.ndarray]]
    services: Optional[List[np.ndarray]]
    horizon: int
    warmup: int
    episode_seed: int

    def wait_mean(self) -> np.ndarray:
        return _safe_div(self.sum_w, self.cycle_count)

    def wait_sq_mean(self) -> np.ndarray:
        return _safe_div(self.sum_w2, self.cycle_count)

    def service_sq_mean(self) -> np.ndarray:
        return _safe_div(self.sum_s2, self.cycle_count)


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.full(num.shape, np.nan)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


def _policy_encoding(spec: PolicySpec, params: Sequence[SourceParams]):
    """Map a policy spec onto the kernel's (kind, arrays) encoding."""
    n = len(params)
    mu = np.zeros(n)
    beta = np.ones(n)
    gamma = np.ones(n)
    v = 1.0
    q_bar = np.zeros(n)
    wbp = True
    schedule = np.array([-1], dtype=np.int64)

    if isinstance(spec, (Srp, Nsrp)):
        if len(spec.mu) != n:
            raise ConfigurationError("mu length must match the number of sources")
        mu = np.asarray(spec.mu, dtype=np.float64)
        kind = _kernel.K_SRP if isinstance(spec, Srp) else _kernel.K_NSRP
    elif isinstance(spec, Greedy):
        kind = _kernel.K_GREEDY
    elif isinstance(spec, Mwl1):
        kind = _kernel.K_MWL1
    elif isinstance(spec, MaxWeight):
        if len(spec.beta) != n:
            raise ConfigurationError("beta length must match the number of sources")
        beta = np.asarray(spec.beta, dtype=np.float64)
        gamma = np.asarray(spec.gamma, dtype=np.float64)
        v = float(spec.V)
        q_bar = np.asarray(spec.q_bar, dtype=np.float64)
        wbp = bool(spec.weight_index_by_p)
        kind = _kernel.K_MW
    elif isinstance(spec, FixedSchedule):
        for a in spec.assignment:
            if a is not None and a >= n:
                raise ConfigurationError(f"scheduled source {a} out of range [0, {n})")
        schedule = np.array(
            [-1 if a is None else a for a in spec.assignment], dtype=np.int64
        )
        kind = _kernel.K_FIXED
    else:
        raise ConfigurationError(f"unknown policy spec {spec!r}")
    return kind, mu, beta, gamma, v, q_bar, wbp, schedule


def run_episode(
    params: Sequence[SourceParams],
    spec: PolicySpec,
    config: SimConfig,
    *,
    replication: int = 0,
    collect_cycles: bool = True,
    engine: str = "auto",
) -> Metrics:
    """Simulate one episode of ``config.horizon`` slots under ``spec``.

    ``replication`` selects the Philox episode key derived from
    (config.seed, replication); identical inputs give bit-identical metrics.
    engine='python' forces the reference path (slow, used for
    cross-validation); 'auto' prefers the compiled kernel.
    """
    alpha, p, L = params_arrays(params)
    if engine == "auto":
        engine = "numba" if _HAVE_KERNEL else "python"
    if engine not in ("numba", "python"):
        raise ConfigurationError(f"unknown engine {engine!r}")

    key = rng.episode_key(config.seed, replication)
    episode_seed = (key[1] << 32) | key[0]

    if engine == "python":
        return _run_python_episode(params, spec, config, key, collect_cycles, episode_seed)

    n = len(params)
    T = config.horizon
    kind, mu, beta, gamma, v, q_bar, wbp, schedule = _policy_encoding(spec, params)

    if collect_cycles:
        caps = [T // int(li) + 1 for li in L]
        cyc_off = np.zeros(n + 1, dtype=np.int64)
        cyc_off[1:] = np.cumsum(caps)
        w_buf = np.zeros(int(cyc_off[-1]), dtype=np.int32)
        s_buf = np.zeros(int(cyc_off[-1]), dtype=np.int32)
    else:
        cyc_off = np.zeros(n + 1, dtype=np.int64)
        w_buf = np.zeros(1, dtype=np.int32)
        s_buf = np.zeros(1, dtype=np.int32)

    if kind == _kernel.K_MW:
        c_off = np.zeros(n + 1, dtype=np.int64)
        c_off[1:] = np.cumsum(L)
        c_buf = np.zeros(int(c_off[-1]), dtype=np.float64)
    else:
        c_off = np.zeros(n + 1, dtype=np.int64)
        c_buf = np.zeros(1, dtype=np.float64)

    sum_wh = np.zeros(1)
    sum_h = np.zeros(n)
    n_deliv = np.zeros(n, dtype=np.int64)
    n_deliv_w = np.zeros(n, dtype=np.int64)
    n_updates = np.zeros(n, dtype=np.int64)
    cyc_n = np.zeros(n, dtype=np.int64)
    sums = [np.zeros(n) for _ in range(7)]
    x = np.zeros(n)
    x_max = np.zeros(n)
    violations = np.zeros(1, dtype=np.int64)
    h = np.ones(n, dtype=np.int64)
    z = np.zeros(n, dtype=np.int64)
    l = L.copy()

    status, err_slot, err_src = _kernel.run_episode_kernel(
        alpha,
        p,
        L,
        kind,
        mu,
        beta,
        gamma,
        v,
        q_bar,
        wbp,
        schedule,
        T,
        config.warmup,
        config.mode is GenerationMode.HOLD_UNTIL_DELIVERY,
        np.uint64(key[0]),
        np.uint64(key[1]),
        np.uint64(key[2]),
        collect_cycles,
        w_buf,
        s_buf,
        cyc_off,
        c_buf,
        c_off,
        sum_wh,
        sum_h,
        n_deliv,
        n_deliv_w,
        n_updates,
        cyc_n,
        *sums,
        x,
        x_max,
        violations,
        h,
        z,
        l,
    )
    if status != _kernel.OK:
        reason = {
            _kernel.ERR_LREM: "remaining-packet count left [1, L]",
            _kernel.ERR_Z_GT_H: "system time exceeded the age",
            _kernel.ERR_MULTILOCK: "no-switching run had several mid-service sources",
        }[status]
        raise InvariantError(
            f"{reason} at slot {err_slot} (source {err_src})",
            slot=err_slot,
            source=err_src,
            snapshot={"h": h.copy(), "z": z.copy(), "l_rem": l.copy()},
        )

    window = T - config.warmup
    waits = services = None
    if collect_cycles:
        waits = [
            np.array(w_buf[cyc_off[i] : cyc_off[i] + cyc_n[i]], dtype=np.int64)
            for i in range(n)
        ]
        services = [
            np.array(s_buf[cyc_off[i] : cyc_off[i] + cyc_n[i]], dtype=np.int64)
            for i in range(n)
        ]
    return Metrics(
        ewsaoi=float(sum_wh[0]) / (window * n),
        mean_h=sum_h / window,
        throughput=n_deliv / T,
        throughput_window=n_deliv_w / window,
        deliveries=n_deliv,
        updates=n_updates,
        cycle_count=cyc_n,
        sum_w=sums[0],
        sum_w2=sums[1],
        sum_s=sums[2],
        sum_s2=sums[3],
        sum_ws=sums[4],
        sum_ws2=sums[5],
        sum_spws=sums[6],
        mw_order_violations=int(violations[0]),
        debt_max=x_max,
        waits=waits,
        services=services,
        horizon=T,
        warmup=config.warmup,
        episode_seed=episode_seed,
    )


def _run_python_episode(params, spec, config, key, collect_cycles, episode_seed) -> Metrics:
    """Reference engine: drives model.advance_slot and the policy decide
    functions slot by slot, consuming the same Philox streams as the kernel."""
    n = len(params)
    T = config.horizon
    alpha, p, L = params_arrays(params)
    state = init_state(params)

    is_mw = isinstance(spec, MaxWeight)
    q_bar = list(spec.q_bar) if is_mw else [0.0] * n

    sum_wh = 0.0
    sum_h = np.zeros(n)
    n_drawn = np.zeros(n, dtype=np.int64)
    n_deliv = np.zeros(n, dtype=np.int64)
    n_deliv_w = np.zeros(n, dtype=np.int64)
    n_updates = np.zeros(n, dtype=np.int64)
    cyc_n = np.zeros(n, dtype=np.int64)
    sums = [np.zeros(n) for _ in range(7)]
    x_max = np.zeros(n)
    violations = 0
    first = [0] * n
    last_comp = [0] * n
    s_prev = np.zeros(n)
    c_pending: List[List[float]] = [[] for _ in range(n)]
    waits: List[List[int]] = [[] for _ in range(n)]
    services: List[List[int]] = [[] for _ in range(n)]

    for t in range(1, T + 1):
        if t > config.warmup:
            acc = 0.0
            for i in range(n):
                acc += alpha[i] * state.sources[i].h
                sum_h[i] += state.sources[i].h
            sum_wh += acc

        # decide, drawing the slot-t policy uniform only when the rule needs it
        c_sched = 0.0
        if isinstance(spec, Srp):
            decision = srp_decide(spec.mu, rng.uniform(key, rng.POLICY_STREAM, t - 1))
        elif isinstance(spec, Nsrp):
            locked = [i for i in range(n) if state.sources[i].l_rem < params[i].L]
            u = None if locked else rng.uniform(key, rng.POLICY_STREAM, t - 1)
            decision = nsrp_decide(spec.mu, state, u)
        elif isinstance(spec, Greedy):
            decision = greedy_decide(state)
        elif isinstance(spec, Mwl1):
            decision = mwl1_decide(state, params)
        elif isinstance(spec, MaxWeight):
            decision = mw_decide(state, params, spec)
            c_sched = mw_index(decision.source, state, params, spec).c_value
        elif isinstance(spec, FixedSchedule):
            decision = fixed_schedule_decide(spec, t)
            if not decision.is_idle and decision.source >= n:
                raise ConfigurationError(
                    f"scheduled source {decision.source} out of range [0, {n})"
                )
        else:
            raise ConfigurationError(f"unknown policy spec {spec!r}")

        channel_on = False
        if not decision.is_idle:
            i = decision.source
            uc = rng.uniform(key, rng.channel_stream(i), int(n_drawn[i]))
            n_drawn[i] += 1
            channel_on = uc < p[i]

        state, events = advance_slot(state, decision, channel_on, config.mode, q_bar)

        for ev in events:
            i = ev.source
            n_deliv[i] += 1
            if t > config.warmup:
                n_deliv_w[i] += 1
            if ev.kind is DeliveryKind.UPDATE_COMPLETE:
                tprime = first[i] if first[i] > 0 else ev.slot
                W = tprime - last_comp[i]
                S = ev.slot - tprime
                ws = float(W + S)
                sums[0][i] += W
                sums[1][i] += float(W) * W
                sums[2][i] += S
                sums[3][i] += float(S) * S
                sums[4][i] += ws
                sums[5][i] += ws * ws
                sums[6][i] += s_prev[i] * ws
                s_prev[i] = float(S)
                if collect_cycles:
                    waits[i].append(W)
                    services[i].append(S)
                if is_mw:
                    if n_updates[i] > 0:
                        violations += sum(1 for c in c_pending[i] if c > c_sched)
                    c_pending[i].clear()
                cyc_n[i] += 1
                n_updates[i] += 1
                last_comp[i] = ev.slot
                first[i] = 0
            else:
                if ev.kind is DeliveryKind.FIRST_PACKET:
                    first[i] = ev.slot
                if is_mw:
                    c_pending[i].append(c_sched)

        for i in range(n):
            src = state.sources[i]
            if src.x_debt > x_max[i]:
                x_max[i] = src.x_debt
            if not 1 <= src.l_rem <= params[i].L:
                raise InvariantError(
                    f"remaining-packet count left [1, L] at slot {t} (source {i})",
                    slot=t,
                    source=i,
                    snapshot=state,
                )
            if src.z > src.h:
                raise InvariantError(
                    f"system time exceeded the age at slot {t} (source {i})",
                    slot=t,
                    source=i,
                    snapshot=state,
                )

    window = T - config.warmup
    return Metrics(
        ewsaoi=sum_wh / (window * n),
        mean_h=sum_h / window,
        throughput=n_deliv / T,
        throughput_window=n_deliv_w / window,
        deliveries=n_deliv,
        updates=n_updates,
        cycle_count=cyc_n,
        sum_w=sums[0],
        sum_w2=sums[1],
        sum_s=sums[2],
        sum_s2=sums[3],
        sum_ws=sums[4],
        sum_ws2=sums[5],
        sum_spws=sums[6],
        mw_order_violations=violations,
        debt_max=x_max,
        waits=[np.array(w, dtype=np.int64) for w in waits] if collect_cycles else None,
        services=[np.array(s, dtype=np.int64) for s in services] if collect_cycles else None,
        horizon=T,
        warmup=config.warmup,
        episode_seed=episode_seed,
    )


@dataclass
class ReplicationSummary:
    """Replication-level aggregate: mean/std/CI of the weighted mean age and
    pooled per-source metrics. With a single replication the spread fields
    are reported as 0."""

    episodes: List[Metrics]
    ewsaoi_mean: float
    ewsaoi_std: float
    ewsaoi_stderr: float
    ewsaoi_ci95: float
    mean_h: np.ndarray
    throughput_mean: np.ndarray
    throughput_stderr: np.ndarray
    throughput_window_mean: np.ndarray
    throughput_window_stderr: np.ndarray
    updates_mean: np.ndarray
    mw_order_violations: int


def run_replications(
    params: Sequence[SourceParams],
    spec: PolicySpec,
    config: SimConfig,
    *,
    collect_cycles: bool = False,
    engine: str = "auto",
) -> ReplicationSummary:
    """Run config.replications independent episodes; replication r is keyed by
    (config.seed, r)."""
    episodes = [
        run_episode(
            params,
            spec,
            config,
            replication=r,
            collect_cycles=collect_cycles,
            engine=engine,
        )
        for r in range(config.replications)
    ]
    vals = np.array([m.ewsaoi for m in episodes])
    R = len(vals)
    std = float(np.std(vals, ddof=1)) if R > 1 else 0.0
    stderr = std / math.sqrt(R) if R > 1 else 0.0
    thr = np.stack([m.throughput for m in episodes])
    thr_stderr = (
        np.std(thr, axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(thr.shape[1])
    )
    thr_w = np.stack([m.throughput_window for m in episodes])
    thr_w_stderr = (
        np.std(thr_w, axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(thr_w.shape[1])
    )
    return ReplicationSummary(
        episodes=episodes,
        ewsaoi_mean=float(np.mean(vals)),
        ewsaoi_std=std,
        ewsaoi_stderr=stderr,
        ewsaoi_ci95=1.96 * stderr,
        mean_h=np.mean(np.stack([m.mean_h for m in episodes]), axis=0),
        throughput_mean=thr.mean(axis=0),
        throughput_stderr=thr_stderr,
        throughput_window_mean=thr_w.mean(axis=0),
        throughput_window_stderr=thr_w_stderr,
        updates_mean=np.mean(np.stack([m.updates for m in episodes]), axis=0),
        mw_order_violations=sum(m.mw_order_violations for m in episodes),
    )


def reconstruct_prop1(
    metrics: Metrics, params: Sequence[SourceParams], cycle_constant: float = 1.5
) -> float:
    """Rebuild the weighted mean age from per-cycle statistics alone:
    per source M[(W+S)^2] / (2 M[W+S]) + M[S_prev (W+S)] / M[W+S] + 3/2,
    then the alpha-weighted mean over sources.

    The 3/2 is the exact per-cycle constant; cycle_constant=1.0 reproduces the
    first-order approximation for comparison.
    """
    alpha, _, _ = params_arrays(params)
    if np.any(metrics.cycle_count == 0):
        missing = np.nonzero(metrics.cycle_count == 0)[0].tolist()
        raise InvariantError(f"no completed cycles for sources {missing}")
    m1 = metrics.sum_ws / metrics.cycle_count
    m2 = metrics.sum_ws2 / metrics.cycle_count
    mx = metrics.sum_spws / metrics.cycle_count
    per_source = m2 / (2.0 * m1) + mx / m1 + cycle_constant
    return float(np.mean(alpha * per_source))
