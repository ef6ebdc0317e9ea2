"""Rademacher complexity estimates, closed-form bounds and a covering-number surrogate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _rng
from ._optim import OptBudget, max_quadratic_on_ball, maximize
from .hypotheses import BoundedLoss, LinearClass
from .panel import as_arrays


@dataclass
class ComplexityEstimate:
    value: float
    kind: str  # empirical_rademacher | linear_closed_form | relu_closed_form | covering_log
    n_sigma_draws: Optional[int] = None
    stderr: Optional[float] = None
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def provenance(self) -> str:
        return {
            "empirical_rademacher": "monte_carlo",
            "covering_log": "SURROGATE",
        }.get(self.kind, "closed_form")

    def to_dict(self):
        d = {"value": self.value, "kind": self.kind, "provenance": self.provenance, "flags": list(self.flags)}
        if self.n_sigma_draws is not None:
            d["n_sigma_draws"] = self.n_sigma_draws
            d["stderr"] = self.stderr
        d.update(self.extra)
        return d


def _inputs(examples, p=None):
    X, y = as_arrays(examples)
    if p is not None:
        X = X[:, X.shape[1] - p :]
    return X, y


def data_radius(examples, lambda_cap: float, p=None) -> float:
    """Bound on ``|prediction|`` and ``|target|`` for a linear class on these examples."""
    X, y = _inputs(examples, p)
    return float(max(lambda_cap * np.max(np.linalg.norm(X, axis=1)), np.max(np.abs(y))))


def empirical_rademacher(examples, cls, loss_spec: BoundedLoss, n_sigma_draws: int = 100,
                         opt_budget: Optional[OptBudget] = None, seed: int = 0) -> ComplexityEstimate:
    """Average over sign vectors of ``sup_h (1/m) sum_i sigma_i L(h(x_i), y_i)``.

    Each sign vector uses its own stream ``(seed, SIGMA, k)``.  On the linear
    class with squared loss the supremum is solved exactly when clipping is
    inactive at the maximizer.
    """
    budget = opt_budget or OptBudget()
    X, y = _inputs(examples)
    m = len(y)
    exact_route = isinstance(cls, LinearClass) and loss_spec.base == "squared"
    Xp = X[:, X.shape[1] - cls.p :]
    sups, n_exact = [], 0
    for k in range(n_sigma_draws):
        sig = _rng.stream(seed, _rng.SIGMA, k).choice([-1.0, 1.0], size=m)
        if exact_route:
            Q = (Xp * sig[:, None]).T @ Xp / m
            g = -2.0 * Xp.T @ (sig * y) / m
            c = float(sig @ (y * y) / m)
            val, w = max_quadratic_on_ball(Q, g, c, cls.lambda_cap)
            if np.max((Xp @ w - y) ** 2) <= loss_spec.clip_cap:
                sups.append(val)
                n_exact += 1
                continue

        def f(thetas, sig=sig):
            return loss_spec(cls.predict_batch(thetas, X), y[None, :]) @ sig / m

        sups.append(maximize(f, cls.dim, cls.project, cls.sample, budget, _rng.derive_seed(seed, _rng.SIGMA, k)).value)
    sups = np.array(sups)
    stderr = float(sups.std(ddof=1) / np.sqrt(len(sups))) if len(sups) > 1 else float("nan")
    flags = [] if n_exact == n_sigma_draws else ["optimizer_lower_bound"]
    return ComplexityEstimate(float(max(sups.mean(), 0.0)), "empirical_rademacher", n_sigma_draws, stderr, flags,
                              {"exact_draws": n_exact, "raw_mean": float(sups.mean())})


def linear_rademacher_bound(lambda_cap: float, examples, loss_spec: Optional[BoundedLoss] = None,
                            p: Optional[int] = None, radius: Optional[float] = None) -> ComplexityEstimate:
    """``Lambda * max_i ||x_i|| / sqrt(m)``, times the loss's Lipschitz constant when a loss is given.

    ``p`` restricts inputs to their trailing ``p`` coordinates.  ``radius``
    overrides the data range used for the Lipschitz constant.
    """
    X, y = _inputs(examples, p)
    m = len(X)
    base = lambda_cap * float(np.max(np.linalg.norm(X, axis=1))) / np.sqrt(m)
    extra = {"hypothesis_bound": base}
    lip = 1.0
    if loss_spec is not None:
        r = data_radius(examples, lambda_cap, p) if radius is None else radius
        lip = loss_spec.lipschitz(r)
        extra.update(lipschitz=lip, data_radius=r)
    return ComplexityEstimate(base * lip, "linear_closed_form", extra=extra)


def relu_net_rademacher_bound(depth: int, gamma: float, examples, p: Optional[int] = None,
                              loss_spec: Optional[BoundedLoss] = None, radius: Optional[float] = None) -> ComplexityEstimate:
    """``2**(depth - 1/2) * gamma * max_i ||x_i|| / sqrt(m)``, optionally times a Lipschitz constant."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    X, y = _inputs(examples, p)
    base = 2 ** (depth - 0.5) * gamma * float(np.max(np.linalg.norm(X, axis=1))) / np.sqrt(len(X))
    extra = {"hypothesis_bound": base}
    lip = 1.0
    if loss_spec is not None:
        if radius is None:
            radius = float(max(gamma * np.max(np.linalg.norm(X, axis=1)), np.max(np.abs(y))))
        lip = loss_spec.lipschitz(radius)
        extra.update(lipschitz=lip, data_radius=radius)
    return ComplexityEstimate(base * lip, "relu_closed_form", extra=extra)


def linear_seq_covering_log(alpha: float, lambda_cap: float, data_radius: float, p: int, T: int) -> ComplexityEstimate:
    """SURROGATE ``log N <= p * log(1 + 2 Lambda R sqrt(T) / alpha)`` for the linear class."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if np.isinf(alpha):
        value = 0.0
    else:
        value = p * float(np.log1p(2 * lambda_cap * data_radius * np.sqrt(T) / alpha))
    return ComplexityEstimate(value, "covering_log", flags=["surrogate_covering"],
                              extra={"alpha": alpha, "lambda_cap": lambda_cap, "data_radius": data_radius,
                                     "p": p, "T": T})
