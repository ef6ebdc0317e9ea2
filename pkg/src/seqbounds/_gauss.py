"""Exact expectations of clipped losses under Gaussian targets."""

import numpy as np
from scipy.special import ndtr

_INV_SQRT_2PI = 1.0 / np.sqrt(2 * np.pi)


def _pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def _partial_moments(shift, sd, lo, hi):
    """For ``D = shift + sd * Z``: ``P(lo<D<hi)``, ``E[D; lo<D<hi]``, ``E[D^2; lo<D<hi]``."""
    a = (lo - shift) / sd
    b = (hi - shift) / sd
    pa, pb = _pdf(a), _pdf(b)
    mass = ndtr(b) - ndtr(a)
    # a * pdf(a) is 0 in the limit a -> +-inf
    apa = np.where(np.isfinite(a), a * pa, 0.0)
    bpb = np.where(np.isfinite(b), b * pb, 0.0)
    m1 = shift * mass + sd * (pa - pb)
    m2 = shift**2 * mass + 2 * shift * sd * (pa - pb) + sd**2 * (mass + apa - bpb)
    return mass, m1, m2


def expected_loss(loss_spec, pred, mean, sd):
    """``E[L(pred, Y)]`` for ``Y ~ N(mean, sd^2)``, elementwise; ``sd = 0`` is a point mass."""
    pred, mean, sd = np.broadcast_arrays(
        np.asarray(pred, dtype=np.float64), np.asarray(mean, dtype=np.float64), np.asarray(sd, dtype=np.float64)
    )
    shift = pred - mean
    cap = loss_spec.clip_cap
    out = np.asarray(loss_spec(pred, mean), dtype=np.float64).copy()
    pos = sd > 0
    if not np.any(pos):
        return out
    s, d = shift[pos], sd[pos]
    if loss_spec.base == "squared":
        c = np.sqrt(cap)
        mass, _, m2 = _partial_moments(s, d, -c, c)
        val = m2 + cap * (1 - mass)
    else:
        mass_p, m1_p, _ = _partial_moments(s, d, 0.0, cap)
        mass_n, m1_n, _ = _partial_moments(s, d, -cap, 0.0)
        val = m1_p - m1_n + cap * (1 - mass_p - mass_n)
    out[pos] = val
    return out


def expected_loss_unclipped(loss_spec, pred, mean, sd):
    shift = np.asarray(pred, dtype=np.float64) - np.asarray(mean, dtype=np.float64)
    sd = np.asarray(sd, dtype=np.float64)
    if loss_spec.base == "squared":
        return shift**2 + sd**2
    # folded normal mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, shift / np.where(sd > 0, sd, 1), 0)
    return np.where(sd > 0, sd * 2 * _pdf(z) + shift * (1 - 2 * ndtr(-z)), np.abs(shift))
