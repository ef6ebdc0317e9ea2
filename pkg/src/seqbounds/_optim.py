"""Supremum search over hypothesis parameters.

``maximize`` is a multi-start projected gradient ascent with central-difference
gradients, preceded by a random search.  All randomness comes from streams
keyed by the restart or sample index, so a larger budget replays every
trajectory of a smaller one and the best value found never decreases.

``max_quadratic_on_ball`` solves the quadratic case exactly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import _rng


@dataclass(frozen=True)
class OptBudget:
    restarts: int = 16
    iterations: int = 200
    fd_step: float = 1e-5
    init_step: float = 0.1
    random_samples: int = 256
    # stop a restart after this many iterations without relative gain above tol
    patience: int = 5
    tol: float = 1e-7
    max_halvings: int = 12

    def to_dict(self):
        return asdict(self)

    @classmethod
    def zero(cls):
        return cls(restarts=0, iterations=0)


@dataclass
class OptResult:
    value: float
    theta: np.ndarray
    evaluations: int


def _fd_gradient(f, theta, h):
    d = len(theta)
    probes = np.concatenate([theta + h * np.eye(d), theta - h * np.eye(d)])
    vals = f(probes)
    return (vals[:d] - vals[d:]) / (2 * h), 2 * d


def maximize(
    f: Callable[[np.ndarray], np.ndarray],
    dim: int,
    project: Callable[[np.ndarray], np.ndarray],
    sample: Callable[[np.random.Generator], np.ndarray],
    budget: Optional[OptBudget] = None,
    seed: int = 0,
    starts=(),
) -> OptResult:
    """Maximize a batched objective ``f((k, dim)) -> (k,)`` over a feasible set.

    ``starts`` are extra deterministic initial points tried before the random
    restarts.
    """
    budget = budget or OptBudget()
    best_val, best_theta, n_eval = -np.inf, None, 0

    def consider(vals, thetas):
        nonlocal best_val, best_theta
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_theta = float(vals[k]), np.array(thetas[k], dtype=np.float64)

    rng = _rng.stream(seed, _rng.RANDOM_SEARCH)
    chunk = 256
    for lo in range(0, budget.random_samples, chunk):
        thetas = np.stack([sample(rng) for _ in range(min(chunk, budget.random_samples - lo))])
        consider(f(thetas), thetas)
        n_eval += len(thetas)

    inits = [np.asarray(s, dtype=np.float64) for s in starts]
    if budget.iterations > 0:
        inits += [sample(_rng.stream(seed, _rng.RESTART, r)) for r in range(budget.restarts)]
    for theta in inits:
        theta = project(theta)
        val = float(f(theta[None])[0])
        n_eval += 1
        consider([val], [theta])
        step, stale = budget.init_step, 0
        for _ in range(budget.iterations):
            grad, used = _fd_gradient(f, theta, budget.fd_step)
            n_eval += used
            if not np.any(grad):
                break
            # backtracking: the halved steps are evaluated in one batch and the
            # first improving one is taken, as a sequential search would
            steps = step / 2.0 ** np.arange(budget.max_halvings)
            steps = steps[steps > 1e-12]
            if len(steps) == 0:
                break
            cands = np.stack([project(theta + s * grad) for s in steps])
            cvals = f(cands)
            n_eval += len(cands)
            better = np.nonzero(cvals > val)[0]
            if len(better) == 0:
                step = steps[-1] / 2
                if step <= 1e-12:
                    break
                continue
            j = better[0]
            cand, cval, step = cands[j], float(cvals[j]), steps[j]
            gain = cval - val
            theta, val = cand, cval
            consider([val], [theta])
            step = min(step * 2, 1e3)
            stale = stale + 1 if gain <= budget.tol * max(1.0, abs(val)) else 0
            if stale >= budget.patience:
                break

    if best_theta is None:
        best_theta = project(np.zeros(dim))
        best_val = float(f(best_theta[None])[0])
        n_eval += 1
    return OptResult(best_val, best_theta, n_eval)


def max_quadratic_on_ball(Q, g, c=0.0, radius=1.0):
    """Exact ``max_{||v|| <= radius} v'Qv + g'v + c``; returns ``(value, v)``.

    Solved as a trust-region subproblem through the eigendecomposition of
    ``Q``, including the degenerate case where the linear term has no weight
    on the top eigenspace.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    Q = (Q + Q.T) / 2
    g = np.asarray(g, dtype=np.float64).reshape(-1)
    evals, U = np.linalg.eigh(Q)
    gb = U.T @ g
    lam_max = evals[-1]
    scale = max(1.0, np.max(np.abs(evals)), np.linalg.norm(g))

    def value(v):
        return float(v @ Q @ v + g @ v + c)

    if radius == 0:
        return float(c), np.zeros_like(g)

    # stationarity: 2(mu I - Q) v = g with mu >= max(lam_max, 0)
    def norm_at(mu):
        return np.linalg.norm(gb / (2 * (mu - evals)))

    floor = max(lam_max, 0.0)
    top = np.abs(evals - lam_max) <= 1e-12 * scale
    g_top = np.linalg.norm(gb[top])

    if lam_max < 0:
        v_int = U @ (gb / (-2 * evals))
        if np.linalg.norm(v_int) <= radius:
            return value(v_int), v_int

    if g_top <= 1e-14 * scale and floor == lam_max:
        # possibly the hard case: check the norm reached at mu = lam_max
        coef = np.zeros_like(gb)
        coef[~top] = gb[~top] / (2 * (lam_max - evals[~top]))
        v0 = U @ coef
        n0 = np.linalg.norm(v0)
        if n0 <= radius:
            u = U[:, np.argmax(evals)]
            tau = np.sqrt(max(radius**2 - n0**2, 0.0))
            cands = [v0 + tau * u, v0 - tau * u]
            vals = [value(v) for v in cands]
            k = int(np.argmax(vals))
            return vals[k], cands[k]

    lo = floor + 1e-15 * scale
    hi = floor + np.linalg.norm(g) / (2 * radius) + 1e-12 * scale
    while norm_at(hi) > radius:
        hi = floor + 2 * (hi - floor)
    if norm_at(lo) <= radius:
        mu = lo
    else:
        mu = brentq(lambda t: 1.0 / norm_at(t) - 1.0 / radius, lo, hi, xtol=1e-15, rtol=1e-14, maxiter=500)
    v = U @ (gb / (2 * (mu - evals)))
    n = np.linalg.norm(v)
    if n > radius:
        v *= radius / n
    return value(v), v
