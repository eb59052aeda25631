"""Compiled episode loop.

Private backend of :mod:`aoilab.simulation`. Implements exactly the same slot
semantics as the pure-Python reference path (model.advance_slot + the policy
decide functions) on flat arrays, with the Philox4x32-10 streams from
:mod:`aoilab.rng` generated in-loop. Equivalence between the two paths is
asserted by the test suite.
"""

import numpy as np
from numba import njit

# policy codes
K_SRP = 0
K_NSRP = 1
K_GREEDY = 2
K_MWL1 = 3
K_MW = 4
K_FIXED = 5

# status codes
OK = 0
ERR_LREM = 1
ERR_Z_GT_H = 2
ERR_MULTILOCK = 3

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S5 = np.uint64(5)
_S6 = np.uint64(6)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _u01(k0, k1, k2, stream, index):
    """Philox4x32-10 uniform in [0, 1): draw ``index`` of ``stream``."""
    c0 = index & _MASK32
    c1 = (index >> _S32) & _MASK32
    c2 = stream & _MASK32
    c3 = k2
    kk0 = k0
    kk1 = k1
    for _ in range(10):
        prod0 = _M0 * c0
        prod1 = _M1 * c2
        hi0 = (prod0 >> _S32) & _MASK32
        lo0 = prod0 & _MASK32
        hi1 = (prod1 >> _S32) & _MASK32
        lo1 = prod1 & _MASK32
        c0 = (hi1 ^ c1 ^ kk0) & _MASK32
        c1 = lo1
        c2 = (hi0 ^ c3 ^ kk1) & _MASK32
        c3 = lo0
        kk0 = (kk0 + _W0) & _MASK32
        kk1 = (kk1 + _W1) & _MASK32
    return ((c0 >> _S5) * 67108864.0 + (c1 >> _S6)) * _INV53


@njit(cache=True, nogil=True)
def run_episode_kernel(
    alpha,
    p,
    L,
    kind,
    mu,
    beta,
    gamma,
    V,
    q_bar,
    weight_by_p,
    schedule,
    T,
    warmup,
    hold,
    k0,
    k1,
    k2,
    collect,
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
    sum_w,
    sum_w2,
    sum_s,
    sum_s2,
    sum_ws,
    sum_ws2,
    sum_spws,
    x,
    x_max,
    violations,
    h,
    z,
    l,
):
    n = alpha.shape[0]
    period = schedule.shape[0]
    n_drawn = np.zeros(n, dtype=np.int64)
    first = np.zeros(n, dtype=np.int64)
    last_comp = np.zeros(n, dtype=np.int64)
    s_prev = np.zeros(n, dtype=np.float64)
    c_cnt = np.zeros(n, dtype=np.int64)
    mwl1_w = np.sqrt(alpha * p)

    for t in range(1, T + 1):
        if t > warmup:
            acc = 0.0
            for i in range(n):
                acc += alpha[i] * h[i]
                sum_h[i] += h[i]
            sum_wh[0] += acc

        # --- decide ---
        src = -1
        c_sched = 0.0
        if kind == K_SRP or kind == K_NSRP:
            locked = -1
            if kind == K_NSRP:
                nlock = 0
                for i in range(n):
                    if l[i] < L[i]:
                        locked = i
                        nlock += 1
                if nlock > 1:
                    return ERR_MULTILOCK, t, locked
            if locked >= 0:
                src = locked
            else:
                u = _u01(k0, k1, k2, np.uint64(0), np.uint64(t - 1))
                cum = 0.0
                for i in range(n):
                    cum += mu[i]
                    if u < cum:
                        src = i
                        break
        elif kind == K_GREEDY:
            src = 0
            best_h = h[0]
            for i in range(1, n):
                if h[i] > best_h:
                    src = i
                    best_h = h[i]
        elif kind == K_MWL1:
            src = 0
            best = mwl1_w[0] * h[0]
            for i in range(1, n):
                score = mwl1_w[i] * h[i]
                if score > best:
                    src = i
                    best = score
        elif kind == K_MW:
            best = -np.inf
            for i in range(n):
                xi = x[i]
                c = V * (xi if xi > 0.0 else 0.0)
                if l[i] == L[i]:
                    c += beta[i] * (2 * h[i] - 1)
                if l[i] == 1:
                    c += beta[i] * (h[i] * h[i] - 2 * h[i] * z[i])
                    c += gamma[i] * ((z[i] + 2) * (z[i] + 2) - (L[i] + 1) * (L[i] + 1))
                if 1 < l[i] < L[i]:
                    c += gamma[i] * (2 * z[i] + 2 * l[i] - 1)
                score = p[i] * c if weight_by_p else c
                if score > best:
                    src = i
                    best = score
                    c_sched = c
        else:  # K_FIXED
            src = schedule[(t - 1) % period]

        # --- channel draw, scheduled source only ---
        d = False
        if src >= 0:
            uc = _u01(k0, k1, k2, np.uint64(src + 1), np.uint64(n_drawn[src]))
            n_drawn[src] += 1
            d = uc < p[src]

        # --- state update ---
        for i in range(n):
            hit = d and i == src
            if hit:
                n_deliv[i] += 1
                if t > warmup:
                    n_deliv_w[i] += 1
                if l[i] == 1:
                    tprime = first[i] if first[i] > 0 else t
                    W = tprime - last_comp[i]
                    S = t - tprime
                    ws = float(W + S)
                    sum_w[i] += W
                    sum_w2[i] += float(W) * W
                    sum_s[i] += S
                    sum_s2[i] += float(S) * S
                    sum_ws[i] += ws
                    sum_ws2[i] += ws * ws
                    sum_spws[i] += s_prev[i] * ws
                    s_prev[i] = float(S)
                    if collect:
                        idx = cyc_off[i] + cyc_n[i]
                        w_buf[idx] = W
                        s_buf[idx] = S
                    if kind == K_MW:
                        if n_updates[i] > 0:  # cold-start update excluded
                            for j in range(c_cnt[i]):
                                if c_buf[c_off[i] + j] > c_sched:
                                    violations[0] += 1
                        c_cnt[i] = 0
                    cyc_n[i] += 1
                    n_updates[i] += 1
                    last_comp[i] = t
                    first[i] = 0
                    h[i] = z[i] + 1
                    z[i] = 1
                    l[i] = L[i]
                else:
                    if l[i] == L[i]:
                        first[i] = t
                    if kind == K_MW:
                        c_buf[c_off[i] + c_cnt[i]] = c_sched
                        c_cnt[i] += 1
                    l[i] -= 1
                    z[i] += 1
                    h[i] += 1
            else:
                h[i] += 1
                if hold:
                    z[i] += 1
                elif l[i] == L[i]:
                    z[i] = 1
                else:
                    z[i] += 1
            # left-to-right to match the reference path bit-for-bit
            x[i] = x[i] + q_bar[i] - (1.0 if hit else 0.0)
            if x[i] > x_max[i]:
                x_max[i] = x[i]
            if l[i] < 1 or l[i] > L[i]:
                return ERR_LREM, t, i
            if z[i] > h[i]:
                return ERR_Z_GT_H, t, i

    return OK, 0, -1
