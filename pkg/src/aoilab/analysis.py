"""Closed-form performance expressions.

Pure evaluation of the analytical results: the universal lower bound on
weighted mean age, exact mean-age formulas for switching and no-switching
randomized policies, the optimal switching probabilities, waiting/service
moments of the no-switching chain, and the optimality-ratio guarantees.

Normalization convention: every mean-age quantity here is per-source, i.e.
(1/N) sum_i alpha_i * (time-average age of i), matching the simulator's
estimator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .model import SourceParams, params_arrays


def lower_bound(params: Sequence[SourceParams]) -> float:
    """Universal lower bound on the weighted mean age for any scheduler:
    (1/N) * [ (1/2) (sum_i sqrt(alpha_i L_i / p_i))^2 + sum_i alpha_i ]."""
    alpha, p, L = params_arrays(params)
    n = len(alpha)
    s = np.sqrt(alpha * L / p).sum()
    return float((0.5 * s * s + alpha.sum()) / n)


def q_lb(params: Sequence[SourceParams]) -> np.ndarray:
    """Per-source packet throughput at the lower-bound operating point;
    satisfies sum_i q_i / p_i = 1."""
    alpha, p, L = params_arrays(params)
    w = np.sqrt(alpha * L * p / 2.0)
    denom = np.sqrt(alpha * L / (2.0 * p)).sum()
    return w / denom


def _check_mu_domain(mu: np.ndarray) -> None:
    # Evaluation domain is slightly wider than the simplex so that numeric
    # differentiation can probe mu_i +/- h from feasible points.
    if np.any(mu <= 0.0):
        raise ConfigurationError("every mu_i must be > 0 (the mean age diverges at 0)")
    if np.any(mu > 1.0 + 1e-6):
        raise ConfigurationError("every mu_i must be <= 1")
    if mu.sum() > 1.0 + 1e-3:
        raise ConfigurationError(f"sum(mu) must be <= 1, got {mu.sum()}")


def srp_ewsaoi(params: Sequence[SourceParams], mu: Sequence[float]) -> float:
    """Exact weighted mean age of the switching randomized policy with
    scheduling probabilities mu: (1/N) sum alpha_i [ (3L_i-1)/(2 p_i mu_i) + 1 ]."""
    alpha, p, L = params_arrays(params)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != alpha.shape:
        raise ConfigurationError("mu length must match the number of sources")
    _check_mu_domain(mu)
    return float(np.mean(alpha * ((3.0 * L - 1.0) / (2.0 * p * mu) + 1.0)))


def optimal_srp(params: Sequence[SourceParams]) -> np.ndarray:
    """Scheduling probabilities minimizing the SRP mean age:
    mu_i proportional to sqrt(alpha_i (3 L_i - 1) / (2 p_i))."""
    alpha, p, L = params_arrays(params)
    w = np.sqrt(alpha * (3.0 * L - 1.0) / (2.0 * p))
    return w / w.sum()


def optimal_srp_ewsaoi(params: Sequence[SourceParams]) -> float:
    """Mean age of the optimal SRP:
    (1/N) [ sum alpha_i + (sum_i sqrt(alpha_i (3L_i-1)/(2 p_i)))^2 ]."""
    alpha, p, L = params_arrays(params)
    n = len(alpha)
    w = np.sqrt(alpha * (3.0 * L - 1.0) / (2.0 * p)).sum()
    return float((alpha.sum() + w * w) / n)


def rho_srp(params: Sequence[SourceParams]) -> float:
    """Optimality ratio of the optimal SRP against the lower bound."""
    return optimal_srp_ewsaoi(params) / lower_bound(params)


@dataclass(frozen=True)
class NsrpMoments:
    """Waiting/service moments of the no-switching chain for one source.

    e_s2: second moment of the service time (slots^2).
    e_w: mean waiting time (slots).
    e_w2: second moment of the waiting time (slots^2).
    e_y2: per-source second moments of the busy interval a competing source
        occupies when it wins the selection slot.
    """

    e_s2: float
    e_w: float
    e_w2: float
    e_y2: np.ndarray


def nsrp_moments(params: Sequence[SourceParams], mu: Sequence[float], i: int) -> NsrpMoments:
    """Moment set of source i under the no-switching policy with probabilities mu.

    Service time is negative binomial; the waiting time is a first-passage
    time of the selection Markov chain, whose first two moments admit the
    closed recurrences evaluated here.
    """
    alpha, p, L = params_arrays(params)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != alpha.shape:
        raise ConfigurationError("mu length must match the number of sources")
    _check_mu_domain(mu)
    if not 0 <= i < len(alpha):
        raise ConfigurationError(f"source index {i} out of range")

    e_s2 = (L[i] - 1.0) * (L[i] - p[i]) / p[i] ** 2
    mu_l = float((mu * L).sum())
    e_w = (mu_l - mu[i] * (L[i] - 1.0)) / (mu[i] * p[i])
    e_y2 = 2.0 * L - 1.0 + (L - 1.0) * (L - p) / p
    others = np.arange(len(alpha)) != i
    numer = mu[i] * (1.0 + 2.0 * (1.0 - p[i]) * e_w) + float(
        (mu[others] * (e_y2[others] + 2.0 * L[others] * e_w)).sum()
    )
    denom = 1.0 - mu.sum() + p[i] * mu[i]
    if denom <= 0.0:
        raise ConfigurationError("waiting-time recurrence denominator is non-positive")
    e_w2 = numer / denom
    return NsrpMoments(e_s2=float(e_s2), e_w=float(e_w), e_w2=float(e_w2), e_y2=e_y2)


def _nsrp_ewsaoi_arrays(
    alpha: np.ndarray, p: np.ndarray, L: np.ndarray, mu: np.ndarray, corrected: bool
):
    """Vectorized core of nsrp_ewsaoi; hot path for the optimizer.

    mu may be a single probability vector (N,) or a batch (B, N); the return
    is a float or a (B,) array accordingly.
    """
    Lf = L.astype(np.float64)
    batched = mu.ndim == 2
    mu2 = mu if batched else mu[None, :]
    e_s2 = (Lf - 1.0) * (Lf - p) / p**2
    mu_l = (mu2 * Lf).sum(axis=1, keepdims=True)
    e_w = (mu_l - mu2 * (Lf - 1.0)) / (mu2 * p)
    e_y2 = 2.0 * Lf - 1.0 + (Lf - 1.0) * (Lf - p) / p
    s_y = (mu2 * e_y2).sum(axis=1, keepdims=True)
    numer = (
        mu2 * (1.0 + 2.0 * (1.0 - p) * e_w)
        + (s_y - mu2 * e_y2)
        + 2.0 * e_w * (mu_l - mu2 * Lf)
    )
    denom = 1.0 - mu2.sum(axis=1, keepdims=True) + p * mu2
    if np.any(denom <= 0.0):
        raise ConfigurationError("waiting-time recurrence denominator is non-positive")
    e_w2 = numer / denom
    es = (Lf - 1.0) / p
    cross = 2.0 * (e_w if corrected else e_w2) * es
    bracket = (e_w2 + e_s2) / 2.0 + es * es + cross
    const = 1.5 if corrected else 1.0
    out = np.mean(alpha * (mu2 * p / mu_l * bracket + const), axis=1)
    return out if batched else float(out[0])


def nsrp_ewsaoi(
    params: Sequence[SourceParams], mu: Sequence[float], corrected: bool = True
) -> float:
    """Weighted mean age of the no-switching randomized policy.

    With corrected=True (default) the cross term uses the waiting-time mean
    and the exact per-cycle constant 3/2, which matches simulation. The
    corrected=False variant keeps the second moment in the cross term and a
    +1 constant; it is retained for comparison and is biased low.
    """
    alpha, p, L = params_arrays(params)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != alpha.shape:
        raise ConfigurationError("mu length must match the number of sources")
    _check_mu_domain(mu)
    return _nsrp_ewsaoi_arrays(alpha, p, L, mu, corrected)


def rho_mw(params: Sequence[SourceParams], q_bar: Sequence[float]) -> Tuple[float, float]:
    """Optimality-ratio guarantee of the max-weight policy and the slack
    term it is built from: rho = 6 + sqrt(psi) / (N * lower_bound)."""
    alpha, p, L = params_arrays(params)
    q = np.asarray(q_bar, dtype=np.float64)
    if q.shape != alpha.shape:
        raise ConfigurationError("q_bar length must match the number of sources")
    if np.any(q <= 0.0):
        raise ConfigurationError("every q_bar_i must be > 0")
    if np.any(q >= p):
        raise ConfigurationError("every q_bar_i must be < p_i")

    Lf = L.astype(np.float64)
    inner = (
        5.0 * Lf**2 * np.sqrt(p) / q**2
        - Lf / q
        - Lf * np.sqrt(p) / q
        + 2.0 * Lf**2 / q**2
        + 2.0 * Lf**2 / q
        + (-(Lf**2) + 8.0 * Lf + 24.0) / 2.0
    )
    psi = float(alpha.sum() * (alpha / np.sqrt(p) * inner).sum())
    rho = 6.0 + np.sqrt(psi) / (len(alpha) * lower_bound(params))
    return float(rho), psi


@dataclass(frozen=True)
class BoundReport:
    """Bound-side summary of one network: the lower bound, its throughput
    point, and the analytical optimality ratios."""

    lower_bound: float
    q_lb: np.ndarray
    rho_s: float
    rho_mw: float
    psi: float


def bound_report(params: Sequence[SourceParams], eps: float = 1e-3) -> BoundReport:
    """Evaluate the full bound suite; the max-weight ratio uses the default
    throughput targets q_lb * (1 - eps)."""
    lb = lower_bound(params)
    q = q_lb(params)
    rho, psi = rho_mw(params, q * (1.0 - eps))
    return BoundReport(lower_bound=lb, q_lb=q, rho_s=rho_srp(params), rho_mw=rho, psi=psi)
