"""Numerical solver for the no-switching design problem.

The no-switching mean age has no closed-form minimizer, but the objective is
smooth (and reportedly convex) on the probability simplex, so a projected
gradient descent with backtracking line search and central-difference
gradients is enough. Multiple deterministic starts guard against surprises;
disagreement between starts is logged, not hidden.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .analysis import _nsrp_ewsaoi_arrays, optimal_srp, q_lb
from .errors import ConfigurationError, OptimizerError
from .model import SourceParams, params_arrays

log = logging.getLogger(__name__)

_PG_NORM_TOL = 1e-8
_START_AGREEMENT_RTOL = 1e-6


@dataclass(frozen=True)
class OptimizerSettings:
    tol: float = 1e-12  # relative objective improvement per sweep
    max_iter: int = 5000
    mu_min: float = 1e-6  # probability floor; mu_i = 0 diverges
    n_starts: int = 3

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")
        if not self.mu_min > 0:
            raise ConfigurationError("mu_min must be > 0")
        if self.n_starts < 1:
            raise ConfigurationError("n_starts must be >= 1")


def project_simplex(v: Sequence[float], floor: float = 0.0) -> np.ndarray:
    """Euclidean projection onto {x : x_i >= floor, sum x = 1}."""
    v = np.asarray(v, dtype=np.float64)
    n = v.size
    if floor * n >= 1.0:
        raise ConfigurationError(f"floor {floor} infeasible for {n} coordinates")
    w = v - floor
    mass = 1.0 - n * floor
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, n + 1)
    feasible = u - (css - mass) / idx > 0.0
    rho = int(np.nonzero(feasible)[0][-1])
    tau = (css[rho] - mass) / (rho + 1)
    return np.maximum(w - tau, 0.0) + floor


def numeric_gradient(
    f: Callable[[np.ndarray], float], mu: Sequence[float], h: Optional[float] = None
) -> np.ndarray:
    """Central-difference gradient of f at mu.

    Step defaults to 1e-6 * max(1, |mu_i|) per coordinate. Evaluation failures
    (f raising on an infeasible point) propagate to the caller.
    """
    mu = np.asarray(mu, dtype=np.float64)
    g = np.empty_like(mu)
    for i in range(mu.size):
        step = h if h is not None else 1e-6 * max(1.0, abs(mu[i]))
        hi = mu.copy()
        lo = mu.copy()
        hi[i] += step
        lo[i] -= step
        g[i] = (f(hi) - f(lo)) / (2.0 * step)
    return g


def _pg_norm(mu: np.ndarray, g: np.ndarray, floor: float) -> float:
    return float(np.linalg.norm(mu - project_simplex(mu - g, floor)))


def _descend(
    f: Callable[[np.ndarray], float],
    mu0: np.ndarray,
    floor: float,
    tol: float,
    max_iter: int,
    fgrad: Optional[Callable[[np.ndarray], np.ndarray]] = None,
):
    """Projected gradient descent from one start. Returns (mu, value, converged).

    The accepted objective sequence is non-increasing by construction; a sweep
    that finds no descent at any backtracked step size counts as converged.
    """
    grad = fgrad if fgrad is not None else (lambda m: numeric_gradient(f, m))
    mu = project_simplex(mu0, floor)
    val = f(mu)
    step = 1.0
    for _ in range(max_iter):
        g = grad(mu)
        if _pg_norm(mu, g, floor) <= _PG_NORM_TOL:
            return mu, val, True
        accepted = False
        s = step
        for _ in range(60):
            cand = project_simplex(mu - s * g, floor)
            cand_val = f(cand)
            if cand_val < val:
                prev_val = val
                mu, val = cand, cand_val
                step = min(s * 2.0, 1e6)
                accepted = True
                break
            s *= 0.5
        if not accepted:
            return mu, val, True  # stalled at every step size: stationary
        if prev_val - val <= tol * max(abs(val), 1e-300):
            return mu, val, True
    return mu, val, False


def optimize_nsrp(
    params: Sequence[SourceParams], settings: Optional[OptimizerSettings] = None
) -> np.ndarray:
    """Minimize the no-switching mean age over the floored simplex.

    Starts from the uniform point, the optimal switching probabilities, and
    the lower-bound throughput point; extra starts (if requested) are drawn
    from a fixed-seed Dirichlet. Raises OptimizerError with the best iterate
    if no start converges within max_iter.
    """
    settings = settings or OptimizerSettings()
    n = len(params)
    if n == 0:
        raise ConfigurationError("source list must be non-empty")
    if settings.mu_min * n >= 1.0:
        raise ConfigurationError(f"mu_min {settings.mu_min} infeasible for N={n}")
    if n == 1:
        return np.array([1.0])

    alpha, p, L = params_arrays(params)

    def objective(mu: np.ndarray) -> float:
        # clip guards the finite-difference probes just below the floor
        return _nsrp_ewsaoi_arrays(
            alpha, p, L, np.clip(mu, settings.mu_min / 2, 1.0), corrected=True
        )

    def gradient(mu: np.ndarray) -> np.ndarray:
        # central differences, same step rule as numeric_gradient, evaluated
        # as one batch for speed
        steps = 1e-6 * np.maximum(1.0, np.abs(mu))
        probes = np.vstack([mu + np.diag(steps), mu - np.diag(steps)])
        vals = _nsrp_ewsaoi_arrays(
            alpha, p, L, np.clip(probes, settings.mu_min / 2, 1.0), corrected=True
        )
        return (vals[:n] - vals[n:]) / (2.0 * steps)

    starts = [
        np.full(n, 1.0 / n),
        optimal_srp(params),
        project_simplex(q_lb(params) / np.array([s.p for s in params]), settings.mu_min),
    ]
    if settings.n_starts > len(starts):
        rng = np.random.default_rng(0)
        for _ in range(settings.n_starts - len(starts)):
            starts.append(rng.dirichlet(np.ones(n)))
    starts = starts[: max(settings.n_starts, 1)]

    results = []
    any_converged = False
    for mu0 in starts:
        mu, val, converged = _descend(
            objective, mu0, settings.mu_min, settings.tol, settings.max_iter, fgrad=gradient
        )
        results.append((val, mu, converged))
        any_converged = any_converged or converged

    results.sort(key=lambda r: r[0])
    best_val, best_mu, _ = results[0]
    worst_val = results[-1][0]
    if worst_val - best_val > _START_AGREEMENT_RTOL * abs(best_val):
        log.warning(
            "multi-start disagreement: objectives span [%.12g, %.12g]", best_val, worst_val
        )
    if not any_converged:
        raise OptimizerError(
            f"no start converged within {settings.max_iter} iterations",
            best_mu=best_mu,
            best_objective=best_val,
        )
    return best_mu
