"""Decision rules: sampling, locking, index policies, schedules."""

import math

import numpy as np
import pytest

from aoilab import (
    ConfigurationError,
    FixedSchedule,
    InvariantError,
    MaxWeight,
    Nsrp,
    SourceParams,
    Srp,
    fixed_schedule_decide,
    greedy_decide,
    init_state,
    mw_decide,
    mw_default_config,
    mw_index,
    mwl1_decide,
    nsrp_decide,
    srp_decide,
    table1_schedules,
)
from aoilab.policies import block_schedule


def _state(params, h=None, z=None, l=None, x=None):
    state = init_state(params)
    for i, src in enumerate(state.sources):
        if h is not None:
            src.h = h[i]
        if z is not None:
            src.z = z[i]
        if l is not None:
            src.l_rem = l[i]
        if x is not None:
            src.x_debt = x[i]
    return state


# --- spec validation -------------------------------------------------------


def test_mu_invariants():
    with pytest.raises(ConfigurationError):
        Srp((0.0, 0.5))
    with pytest.raises(ConfigurationError):
        Srp((0.7, 0.7))
    with pytest.raises(ConfigurationError):
        Nsrp((1.2,))
    Srp((0.5, 0.5))  # boundary ok


def test_max_weight_invariants():
    with pytest.raises(ConfigurationError):
        MaxWeight(beta=(1.0,), gamma=(0.5,), V=1.0, q_bar=(0.5,))  # gamma < beta
    with pytest.raises(ConfigurationError):
        MaxWeight(beta=(1.0,), gamma=(1.0,), V=0.0, q_bar=(0.5,))
    with pytest.raises(ConfigurationError):
        MaxWeight(beta=(1.0,), gamma=(1.0,), V=1.0, q_bar=(1.0,))


def test_fixed_schedule_invariants():
    with pytest.raises(ConfigurationError):
        FixedSchedule(())
    with pytest.raises(ConfigurationError):
        FixedSchedule((0, -2))
    assert FixedSchedule((0, None, 1)).period == 3


# --- srp / nsrp ------------------------------------------------------------


def test_srp_decide_partition():
    assert srp_decide([0.5, 0.5], 0.3).source == 0
    assert srp_decide([0.6, 0.3], 0.95).is_idle
    assert srp_decide([1.0], 0.999).source == 0
    assert srp_decide([0.5, 0.5], 0.5).source == 1  # boundary goes right


def test_srp_frequencies_chi_square():
    """Selection frequencies match mu: chi-square over 1e6 draws."""
    mu = [0.3, 0.25, 0.2]  # idle mass 0.25
    rng = np.random.default_rng(99)
    counts = np.zeros(4)
    for u in rng.random(10**6):
        d = srp_decide(mu, u)
        counts[3 if d.is_idle else d.source] += 1
    expected = np.array([0.3, 0.25, 0.2, 0.25]) * 10**6
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 16.27  # chi2_{0.999, df=3}


def test_nsrp_lock_and_fallthrough():
    params = [SourceParams(1.0, 0.5, 5), SourceParams(1.0, 0.5, 5)]
    locked = _state(params, l=[5, 3])
    assert nsrp_decide([0.2, 0.8], locked, 0.05).source == 1

    free = _state(params)
    assert nsrp_decide([0.2, 0.8], free, 0.5).source == 1
    assert nsrp_decide([0.6, 0.3], free, 0.95).is_idle


def test_nsrp_two_locked_sources_rejected():
    params = [SourceParams(1.0, 0.5, 5), SourceParams(1.0, 0.5, 5)]
    corrupted = _state(params, l=[4, 3])
    with pytest.raises(InvariantError):
        nsrp_decide([0.5, 0.5], corrupted, 0.5)


# --- greedy / mwl1 ----------------------------------------------------------


def test_greedy():
    params = [SourceParams(1.0, 1.0, 1)] * 2
    assert greedy_decide(_state(params, h=[5, 3])).source == 0
    assert greedy_decide(_state(params, h=[4, 4])).source == 0  # tie: lowest
    assert greedy_decide(_state(params, h=[1, 9])).source == 1


def test_mwl1_index():
    params = [SourceParams(1.0, 1.0, 1), SourceParams(16.0, 1.0, 1)]
    assert mwl1_decide(_state(params, h=[4, 2]), params).source == 1  # scores (4, 8)

    sym = [SourceParams(2.0, 0.5, 1)] * 2
    assert mwl1_decide(_state(sym, h=[3, 3]), sym).source == 0  # tie

    tied = [SourceParams(9.0, 1.0, 1), SourceParams(1.0, 1.0, 1)]
    assert mwl1_decide(_state(tied, h=[1, 3]), tied).source == 0  # scores (3, 3)


# --- max-weight -------------------------------------------------------------


def _mw(beta, gamma, V=1e-12, q_bar=None, wbp=True):
    n = len(beta)
    return MaxWeight(
        beta=tuple(beta),
        gamma=tuple(gamma),
        V=V,
        q_bar=tuple(q_bar or [0.5] * n),
        weight_index_by_p=wbp,
    )


def test_mw_index_last_packet_branch():
    # L=2, l=1, h=5, z=2, beta=1, gamma=2: (25-20) + 2*(16-9) = 19
    params = [SourceParams(1.0, 0.5, 2)]
    state = _state(params, h=[5], z=[2], l=[1])
    ix = mw_index(0, state, params, _mw([1.0], [2.0]))
    assert ix.c_value == pytest.approx(19.0, abs=1e-9)


def test_mw_index_mid_service_branch():
    # L=3, l=2, z=4, gamma=1: 2*4 + 2*2 - 1 = 11
    params = [SourceParams(1.0, 0.5, 3)]
    state = _state(params, h=[9], z=[4], l=[2])
    ix = mw_index(0, state, params, _mw([1.0], [1.0]))
    assert ix.c_value == pytest.approx(11.0, abs=1e-9)


def test_mw_index_waiting_branch():
    # l=L=4, h=3, beta=2: 2*(2*3-1) = 10
    params = [SourceParams(1.0, 0.5, 4)]
    state = _state(params, h=[3], z=[1], l=[4])
    ix = mw_index(0, state, params, _mw([2.0], [2.0]))
    assert ix.c_value == pytest.approx(10.0, abs=1e-9)


def test_mw_index_regimes_exclusive_for_multi_packet():
    """For L >= 2 exactly one l_rem regime contributes; for L = 1 the waiting
    and last-packet contributions add."""
    params = [SourceParams(1.0, 0.25, 3)]
    spec = _mw([1.0], [1.0])
    for l in (1, 2, 3):
        state = _state(params, h=[6], z=[2], l=[l])
        c = mw_index(0, state, params, spec).c_value
        waiting = 2 * 6 - 1
        last = (36 - 24) + ((2 + 2) ** 2 - 16)
        mid = 2 * 2 + 2 * l - 1
        expected = {3: waiting, 2: mid, 1: last}[l]
        assert c == pytest.approx(expected, abs=1e-9)

    one = [SourceParams(1.0, 0.25, 1)]
    state = _state(one, h=[6], z=[2], l=[1])
    c = mw_index(0, state, one, _mw([1.0], [1.0])).c_value
    both = (2 * 6 - 1) + (36 - 24) + ((2 + 2) ** 2 - 4)
    assert c == pytest.approx(both, abs=1e-9)


def test_mw_index_debt_term():
    params = [SourceParams(1.0, 0.5, 2)]
    state = _state(params, h=[3], z=[1], l=[2], x=[4.0])
    spec = _mw([1.0], [1.0], V=0.5)
    assert mw_index(0, state, params, spec).c_value == pytest.approx(5.0 + 2.0)
    state.sources[0].x_debt = -4.0  # positive part only
    assert mw_index(0, state, params, spec).c_value == pytest.approx(5.0)


def test_mw_decide_weighting():
    # engineered so C = (10, 6) with p = (0.5, 1.0)
    params = [SourceParams(1.0, 0.5, 2), SourceParams(1.0, 1.0, 2)]
    state = _state(params, h=[11, 7], z=[1, 1], l=[2, 2])
    beta = (10.0 / 21.0, 6.0 / 13.0)
    spec = _mw(beta, beta, wbp=True)
    c0 = mw_index(0, state, params, spec).c_value
    c1 = mw_index(1, state, params, spec).c_value
    assert (c0, c1) == (pytest.approx(10.0), pytest.approx(6.0))
    assert mw_decide(state, params, spec).source == 1  # 0.5*10 < 1.0*6
    spec_plain = _mw(beta, beta, wbp=False)
    assert mw_decide(state, params, spec_plain).source == 0


def test_mw_decide_never_idles_on_negative_indices():
    params = [SourceParams(1.0, 0.5, 10)] * 2
    state = _state(params, h=[4, 4], z=[4, 4], l=[1, 1])
    spec = _mw([1.0, 1.0], [1.0, 1.0])
    assert all(mw_index(i, state, params, spec).c_value < 0 for i in range(2))
    assert not mw_decide(state, params, spec).is_idle


def test_mw_decide_scale_invariance():
    rng = np.random.default_rng(7)
    params = [SourceParams(2.0, 0.6, 3), SourceParams(1.0, 0.4, 7), SourceParams(3.0, 0.9, 1)]
    base = mw_default_config(params)
    scaled = MaxWeight(
        beta=tuple(100.0 * b for b in base.beta),
        gamma=tuple(100.0 * g for g in base.gamma),
        V=100.0 * base.V,
        q_bar=base.q_bar,
        weight_index_by_p=base.weight_index_by_p,
    )
    for _ in range(200):
        state = _state(
            params,
            h=[int(rng.integers(1, 60)) for _ in range(3)],
            z=[int(rng.integers(1, 20)) for _ in range(3)],
            l=[int(rng.integers(1, p.L + 1)) for p in params],
            x=[float(rng.normal(0, 5)) for _ in range(3)],
        )
        for i in range(3):
            state.sources[i].z = min(state.sources[i].z, state.sources[i].h)
        assert mw_decide(state, params, base) == mw_decide(state, params, scaled)


def test_mw_default_config_variants():
    params = [SourceParams(1.0, 1.0, 1)]
    spec = mw_default_config(params)
    assert spec.q_bar[0] == pytest.approx(0.999)
    assert spec.beta[0] == pytest.approx(1.001001001001001)
    assert spec.gamma[0] == pytest.approx(1.001001001001001)

    sym = [SourceParams(2.0, 0.5, 4)] * 3
    for variant in ("service_scaled", "length_scaled", "plain"):
        s = mw_default_config(sym, variant=variant)
        assert len(set(s.beta)) == 1 and len(set(s.gamma)) == 1

    # the two as-printed variants keep gamma/beta = 1/sqrt(p)
    mixed = [SourceParams(2.0, 0.6, 3), SourceParams(1.0, 0.4, 7)]
    for variant in ("length_scaled", "plain"):
        s = mw_default_config(mixed, variant=variant)
        for b, g, prm in zip(s.beta, s.gamma, mixed):
            assert g / b == pytest.approx(1.0 / math.sqrt(prm.p))
    with pytest.raises(ConfigurationError):
        mw_default_config(mixed, variant="bogus")


# --- fixed schedules --------------------------------------------------------


def test_fixed_schedule_decide():
    spec = FixedSchedule((0, 1))
    assert fixed_schedule_decide(spec, 3).source == 0
    assert fixed_schedule_decide(spec, 2 + 1).source == 0  # periodicity
    idle_first = FixedSchedule((None, 0))
    assert fixed_schedule_decide(idle_first, 1).is_idle


def test_table1_schedules():
    a, b, c, d = table1_schedules(100, 2)
    assert (a.period, b.period, c.period, d.period) == (102, 104, 120, 2)
    assert a.assignment[:100] == tuple([0] * 100)
    assert a.assignment[100:] == (1, 1)
    assert b.assignment[:52] == tuple([0] * 50 + [1, 1])
    assert d.assignment == (0, 1)

    tiny = block_schedule(2, 2, 2)  # one-packet blocks
    assert tiny.period == 6
    assert tiny.assignment == (0, 1, 1, 0, 1, 1)

    with pytest.raises(ConfigurationError):
        table1_schedules(5, 2)  # 10 blocks do not divide 5


def test_decides_are_pure():
    params = [SourceParams(1.0, 0.5, 3), SourceParams(2.0, 0.7, 1)]
    state = _state(params, h=[9, 4], z=[2, 1], l=[2, 1])
    spec = mw_default_config(params)
    assert mw_decide(state, params, spec) == mw_decide(state, params, spec)
    assert greedy_decide(state) == greedy_decide(state)
    assert srp_decide([0.4, 0.4], 0.41) == srp_decide([0.4, 0.4], 0.41)
