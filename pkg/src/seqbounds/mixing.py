"""Mixing coefficients between pairs of series with Gaussian innovations.

The conditional law of two next values given the shared past is a bivariate
Gaussian whose correlation is the noise correlation, so the dependence
coefficient of a pair reduces to a total-variation distance between that
Gaussian and the product of its marginals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _rng
from .processes import ARCorrelatedSpec, simulate_ar_fast

POLE = 0.5


@dataclass(frozen=True)
class MixingEstimate:
    value: float
    kind: str  # analytic_lemma2 | numeric_tv | bar_beta_upper
    sigma: Optional[float] = None
    tolerance: float = 0.0
    applicable: bool = True
    extra: Optional[dict] = None

    def to_dict(self):
        d = {"value": self.value, "kind": self.kind, "sigma": self.sigma,
             "tolerance": self.tolerance, "applicable": self.applicable}
        if self.extra:
            d.update(self.extra)
        return d


def analytic_beta_s2s(sigma: float, sigma0: float) -> float:
    """Closed-form dependence bound ``max(3/(2(1-s0^2)), 1/(1-2 s0)) * sigma``."""
    if not 0 <= sigma <= sigma0:
        raise ValueError("need 0 <= sigma <= sigma0")
    if sigma0 >= POLE:
        raise ValueError("sigma0 must be below 0.5 (pole of 1/(1-2 sigma0))")
    return max(3.0 / (2.0 * (1.0 - sigma0**2)), 1.0 / (1.0 - 2.0 * sigma0)) * sigma


def proof_constant_beta(sigma: float) -> float:
    """Alternative constant ``max(3/(e(1-s^2)), 2/(1-2 s)) * sigma`` carried by the derivation."""
    if not 0 <= sigma < POLE:
        raise ValueError("need 0 <= sigma < 0.5")
    return max(3.0 / (np.e * (1.0 - sigma**2)), 2.0 / (1.0 - 2.0 * sigma)) * sigma


def beta_upper(sigma: float, sigma0: float) -> float:
    """Larger of the two closed-form constants; the conservative choice."""
    return max(analytic_beta_s2s(sigma, sigma0), proof_constant_beta(sigma))


def _trapezoid_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


def numeric_tv_bivariate_gaussian(sigma: float, grid_halfwidth: float = 8.0, grid_step: float = 0.005,
                                  stripe: int = 128) -> MixingEstimate:
    """``(1/2) int int |phi(u)phi(v) - phi_sigma(u, v)| du dv`` by the 2-D trapezoid rule.

    The tolerance is the change against the same rule on the grid of twice the
    step, which shares every other node, so both come out of one pass.
    """
    sigma = float(sigma)
    if not -1 < sigma < 1:
        raise ValueError("sigma must lie in (-1, 1)")
    n = int(round(2 * grid_halfwidth / grid_step)) + 1
    if n % 2 == 0:
        n += 1
    x = np.linspace(-grid_halfwidth, grid_halfwidth, n)
    h = x[1] - x[0]
    phi = np.exp(-x**2 / 2) / np.sqrt(2 * np.pi)
    w_fine = _trapezoid_weights(n, h)
    coarse = np.arange(0, n, 2)
    w_coarse = np.zeros(n)
    w_coarse[coarse] = _trapezoid_weights(len(coarse), 2 * h)

    s2 = 1 - sigma**2
    norm = 1.0 / (2 * np.pi * np.sqrt(s2))
    fine = coarse_sum = 0.0
    for lo in range(0, n, stripe):
        u = x[lo : lo + stripe, None]
        joint = norm * np.exp(-(u**2 - 2 * sigma * u * x[None, :] + x[None, :] ** 2) / (2 * s2))
        diff = np.abs(phi[lo : lo + stripe, None] * phi[None, :] - joint)
        fine += w_fine[lo : lo + stripe] @ diff @ w_fine
        coarse_sum += w_coarse[lo : lo + stripe] @ diff @ w_coarse
    fine, coarse_sum = 0.5 * fine, 0.5 * coarse_sum
    return MixingEstimate(float(fine), "numeric_tv", sigma, float(abs(fine - coarse_sum)))


def correlation(cov) -> np.ndarray:
    cov = np.asarray(cov, dtype=np.float64)
    d = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = cov / np.outer(d, d)
    rho[~np.isfinite(rho)] = 0.0
    return rho


def collection_beta(noise_cov, partition) -> list[MixingEstimate]:
    """Per-collection dependence bound from the largest in-collection noise correlation.

    Singletons get 0.  Collections whose largest correlation reaches 0.5 are
    returned with ``applicable=False`` and a NaN value.
    """
    rho = np.abs(correlation(noise_cov))
    out = []
    for idx in _index_sets(partition):
        idx = np.asarray(sorted(idx))
        if len(idx) < 2:
            out.append(MixingEstimate(0.0, "analytic_lemma2", 0.0))
            continue
        block = rho[np.ix_(idx, idx)]
        s0 = float(np.max(block[~np.eye(len(idx), dtype=bool)]))
        if s0 >= POLE:
            out.append(MixingEstimate(float("nan"), "analytic_lemma2", s0, applicable=False))
        else:
            out.append(MixingEstimate(analytic_beta_s2s(s0, s0), "analytic_lemma2", s0))
    return out


def _index_sets(partition):
    return partition.index_sets if hasattr(partition, "index_sets") else partition


def beta_mass(partition, betas) -> float:
    """``sum_j (|I_j| - 1) beta_j``."""
    sets = _index_sets(partition)
    vals = [b.value if isinstance(b, MixingEstimate) else float(b) for b in betas]
    return float(sum((len(s) - 1) * v for s, v in zip(sets, vals)))


def bar_beta_upper(beta_s2s_val: float, cov_term: float) -> float:
    if beta_s2s_val < 0 or cov_term < 0:
        raise ValueError("inputs must be non-negative")
    return float(beta_s2s_val + cov_term)


def cov_term_oracle(spec: ARCorrelatedSpec, i: int, j: int, n_histories: int = 2000, seed: int = 0,
                    grid_points: int = 161, T: Optional[int] = None) -> MixingEstimate:
    """Monte-Carlo estimate of the history-averaged covariance term between series ``i`` and ``j``.

    With ``p_i`` the conditional density of the next value of series ``i`` given
    the past, returns ``(1/2) int int |E[p_i p_j] - E[p_i] E[p_j]|`` where the
    expectations run over simulated pasts.  The value is biased upwards by
    roughly ``1/sqrt(n_histories)``.
    """
    T = spec.T if T is None else T
    rng = _rng.stream(seed, _rng.COND)
    hist = simulate_ar_fast(spec, n_histories, rng, T=T - 1)
    mu = spec.conditional_mean(hist)  # (n, m)
    sd = spec.noise_sd

    def densities(k):
        spread = mu[:, k]
        lo, hi = spread.min() - 7 * sd[k], spread.max() + 7 * sd[k]
        g = np.linspace(lo, hi, grid_points)
        dens = np.exp(-((g[None, :] - spread[:, None]) ** 2) / (2 * sd[k] ** 2)) / (sd[k] * np.sqrt(2 * np.pi))
        return g, dens

    gi, di = densities(i)
    gj, dj = densities(j)
    joint = di.T @ dj / n_histories
    prod = np.outer(di.mean(axis=0), dj.mean(axis=0))
    wi = _trapezoid_weights(grid_points, gi[1] - gi[0])
    wj = _trapezoid_weights(grid_points, gj[1] - gj[0])
    value = 0.5 * float(wi @ np.abs(joint - prod) @ wj)
    return MixingEstimate(value, "bar_beta_upper", None, 1.0 / np.sqrt(n_histories),
                          extra={"n_histories": n_histories})
