"""Seeded generators for correlated autoregressive panels and tent-function panels."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _rng
from .panel import TimeSeriesPanel

log = logging.getLogger(__name__)

NEG_EIG_TOL = 1e-9
REPAIR_TOL = 1e-6
PHASE_MODES = ("uniform_over_period", "two_point", "drift_half_period")


class CovarianceError(ValueError):
    pass


# covariance constructions


def _tree_distance(m):
    idx = np.arange(m)
    x = idx[:, None] ^ idx[None, :]
    # bit_length of a xor b is the height of the lowest common ancestor
    d = np.zeros_like(x)
    while np.any(x):
        d += x > 0
        x = x >> 1
    return d


def hierarchical_covariance(D: int, decay_base: Optional[float] = None) -> np.ndarray:
    """Tree covariance over the ``2**D`` leaves of a full binary tree.

    ``Sigma[i, j] = decay_base ** -d(i, j)`` where ``d`` counts the levels from
    a leaf up to the lowest common ancestor.  ``decay_base`` defaults to ``m``.
    """
    if D < 1:
        raise ValueError("tree depth D must be >= 1")
    m = 2**D
    base = float(m if decay_base is None else decay_base)
    if base <= 1:
        raise ValueError("decay_base must exceed 1")
    sigma = base ** (-_tree_distance(m).astype(float))
    return check_psd(sigma)


def geodesic_distance(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return np.arccos(np.clip(points @ points.T, -1.0, 1.0))


def geodesic_covariance(grid_points, decay_base: float) -> np.ndarray:
    """``Sigma[i, j] = decay_base ** -arccos(<x_i, x_j>)`` for unit 3-vectors."""
    points = np.asarray(grid_points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError("grid points must be an (m, 3) array")
    if np.any(np.abs(np.linalg.norm(points, axis=1) - 1.0) > 1e-9):
        raise ValueError("grid points must have unit norm")
    if decay_base <= 0:
        raise ValueError("decay_base must be positive")
    sigma = float(decay_base) ** (-geodesic_distance(points))
    np.fill_diagonal(sigma, 1.0)
    return check_psd(sigma)


def geodesic_grid(subdivisions: int = 0) -> np.ndarray:
    """Vertices of an icosphere: 12 points at level 0, 10*4**n + 2 in general."""
    t = (1 + 5**0.5) / 2
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                v = verts[a] + verts[b]
                verts.append(v / np.linalg.norm(v))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts)


def check_psd(sigma: np.ndarray) -> np.ndarray:
    """Validate symmetry and PSD-ness, clipping tiny negative eigenvalues.

    Returns the (possibly repaired) matrix.  Raises :class:`CovarianceError`
    when an eigenvalue is below ``-1e-9`` or the repair would move any entry
    by more than ``1e-6``.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise CovarianceError("covariance must be square")
    if np.max(np.abs(sigma - sigma.T), initial=0.0) > 1e-12:
        raise CovarianceError("covariance is not symmetric")
    evals, evecs = np.linalg.eigh(sigma)
    if evals[0] < -NEG_EIG_TOL:
        raise CovarianceError(f"covariance has eigenvalue {evals[0]:.3e} < -{NEG_EIG_TOL}")
    if evals[0] < 0:
        repaired = (evecs * np.clip(evals, 0, None)) @ evecs.T
        repaired = (repaired + repaired.T) / 2
        shift = np.max(np.abs(repaired - sigma))
        if shift > REPAIR_TOL:
            raise CovarianceError(f"PSD repair moves entries by {shift:.3e}")
        log.warning("clipped negative eigenvalue %.3e; max entry change %.3e", evals[0], shift)
        return repaired
    return sigma


def factorize(sigma: np.ndarray) -> np.ndarray:
    """Symmetric square root ``A`` with ``A @ A.T == sigma``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    evals, evecs = np.linalg.eigh(sigma)
    if evals[0] < -NEG_EIG_TOL:
        raise CovarianceError(f"covariance has eigenvalue {evals[0]:.3e} < -{NEG_EIG_TOL}")
    if evals[0] < 0:
        log.warning("clipping eigenvalue %.3e to zero before factorization", evals[0])
    return (evecs * np.sqrt(np.clip(evals, 0, None))) @ evecs.T


# autoregressive panels


@dataclass(frozen=True, eq=False)
class ARCorrelatedSpec:
    """Lag-``p`` linear AR panel with jointly Gaussian noise ``N(0, noise_cov)``.

    ``weights`` is either a shared length-``p`` vector or an ``(m, p)`` array,
    applied to windows in chronological order (oldest value first).
    ``mean_fn`` optionally replaces the linear map: it takes windows of shape
    ``(..., m, p)`` and returns next-value means of shape ``(..., m)``.
    """

    m: int
    T: int
    p: int
    weights: np.ndarray
    noise_cov: np.ndarray
    burn_in: int = 200
    seed: int = 0
    mean_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.m < 1 or self.T < 2 or self.p < 1:
            raise ValueError("need m >= 1, T >= 2, p >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim == 1:
            w = np.broadcast_to(w, (self.m, w.shape[0])).copy()
        if w.shape != (self.m, self.p):
            raise ValueError(f"weights must have shape ({self.p},) or ({self.m}, {self.p})")
        cov = np.array(self.noise_cov, dtype=np.float64)
        if cov.ndim == 0:
            cov = float(cov) * np.eye(self.m)
        if cov.shape != (self.m, self.m):
            raise ValueError("noise_cov must be m x m")
        cov = check_psd(cov)
        w.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "noise_cov", cov)

    def replace(self, **changes) -> "ARCorrelatedSpec":
        fields = dict(
            m=self.m, T=self.T, p=self.p, weights=self.weights,
            noise_cov=self.noise_cov, burn_in=self.burn_in, seed=self.seed, mean_fn=self.mean_fn,
        )
        fields.update(changes)
        return ARCorrelatedSpec(**fields)

    @property
    def noise_sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.noise_cov))

    def is_stationary(self) -> bool:
        return all(companion_radius(w) < 1 for w in self.weights)

    def conditional_mean(self, history: np.ndarray) -> np.ndarray:
        """Mean of the next value of each series given ``(m, >=p)`` history."""
        history = np.asarray(history, dtype=np.float64)[..., -self.p :]
        if self.mean_fn is not None:
            return np.asarray(self.mean_fn(history), dtype=np.float64)
        return np.einsum("...ik,ik->...i", history, self.weights)

    def to_dict(self) -> dict:
        d = {
            "kind": "ar",
            "m": self.m,
            "T": self.T,
            "p": self.p,
            "weights": self.weights.tolist(),
            "noise_cov": self.noise_cov.tolist(),
            "burn_in": self.burn_in,
            "seed": self.seed,
        }
        if self.mean_fn is not None:
            d["mean_fn"] = getattr(self.mean_fn, "__name__", repr(self.mean_fn))
        return d


def companion_radius(weights) -> float:
    """Spectral radius of the companion matrix of chronological AR weights."""
    w = np.asarray(weights, dtype=np.float64)
    p = len(w)
    comp = np.zeros((p, p))
    comp[0] = w[::-1]
    comp[1:, :-1] = np.eye(p - 1)
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def _ar_noise(spec: ARCorrelatedSpec, n: int, seed) -> np.ndarray:
    # per-series standard normal streams, mixed by the symmetric square root
    z = np.stack([_rng.stream(seed, _rng.NOISE, i).standard_normal(n) for i in range(spec.m)])
    return factorize(spec.noise_cov) @ z


def simulate_ar_panel(spec: ARCorrelatedSpec, seed=None, T=None) -> TimeSeriesPanel:
    """Run the recursion from zero history, discarding ``burn_in`` steps.

    ``seed`` and ``T`` override the spec's values without rebuilding it.
    """
    seed = spec.seed if seed is None else seed
    T = spec.T if T is None else T
    p, n = spec.p, spec.burn_in + T
    eps = _ar_noise(spec, n, seed)
    y = np.zeros((spec.m, p + n))
    for t in range(n):
        y[:, p + t] = spec.conditional_mean(y[:, t : t + p]) + eps[:, t]
    return TimeSeriesPanel(y[:, p + spec.burn_in :], metadata={"process_spec": spec.to_dict()})


def simulate_ar_batch(spec: ARCorrelatedSpec, n: int, seed=None, key=_rng.TRIAL, T=None) -> np.ndarray:
    """``n`` independent panels as an ``(n, m, T)`` array; panel ``r`` uses ``derive_seed(seed, key, r)``."""
    seed = spec.seed if seed is None else seed
    T = spec.T if T is None else T
    return np.stack(
        [simulate_ar_panel(spec, _rng.derive_seed(seed, key, r), T).values for r in range(n)]
    )


def simulate_ar_fast(spec: ARCorrelatedSpec, n: int, rng: np.random.Generator, T=None) -> np.ndarray:
    """Vectorized ``(n, m, T)`` draw from a single stream, for Monte-Carlo averages."""
    T = spec.T if T is None else T
    p, steps = spec.p, spec.burn_in + T
    A = factorize(spec.noise_cov)
    y = np.zeros((n, spec.m, p + steps))
    for t in range(steps):
        z = rng.standard_normal((n, spec.m)) @ A.T
        y[:, :, p + t] = spec.conditional_mean(y[:, :, t : t + p]) + z
    return y[:, :, p + spec.burn_in :]


# tent panels


def tent_value(b, s, T):
    """Periodic tent of height ``b`` and period ``T``: rises on ``[0, T/2]``, falls on ``[T/2, T]``."""
    r = np.mod(np.asarray(s, dtype=np.float64), T)
    out = np.where(r <= T / 2, 2 * b * r / T, 2 * b - 2 * b * r / T)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class TentSpec:
    """Tent-function panel.

    ``uniform_over_period``: integer phase uniform on ``0..T-1``.
    ``two_point``: phase uniform on ``{0, T/2}``.
    ``drift_half_period``: phase 0 with period ``2T``, so the observed stretch
    and the value after it all lie on the rising half.
    """

    m: int
    T: int
    b_range: tuple = (0.0, 1.0)
    phase_mode: str = "two_point"
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.T < 2:
            raise ValueError("need m >= 1 and T >= 2")
        if self.T % 2:
            raise ValueError("tent panels need even T")
        lo, hi = self.b_range
        if not 0 <= lo <= hi <= 1:
            raise ValueError("b_range must lie within [0, 1]")
        object.__setattr__(self, "b_range", (float(lo), float(hi)))
        if self.phase_mode not in PHASE_MODES:
            raise ValueError(f"phase_mode must be one of {PHASE_MODES}")

    @property
    def period(self) -> int:
        return 2 * self.T if self.phase_mode == "drift_half_period" else self.T

    def replace(self, **changes) -> "TentSpec":
        fields = dict(m=self.m, T=self.T, b_range=self.b_range, phase_mode=self.phase_mode, seed=self.seed)
        fields.update(changes)
        return TentSpec(**fields)

    def to_dict(self) -> dict:
        return {
            "kind": "tent",
            "m": self.m,
            "T": self.T,
            "b_range": list(self.b_range),
            "phase_mode": self.phase_mode,
            "seed": self.seed,
        }


def tent_draw(spec: TentSpec, n: int = 1, seed=None):
    """Heights and phases, each of shape ``(n, m)``; draw 0 is the panel's own."""
    seed = spec.seed if seed is None else seed
    rng_s = _rng.stream(seed, _rng.TENT, 1)
    lo, hi = spec.b_range
    b = _rng.stream(seed, _rng.TENT, 0).uniform(lo, hi, size=(n, spec.m))
    if spec.phase_mode == "uniform_over_period":
        s = rng_s.integers(0, spec.T, size=(n, spec.m))
    elif spec.phase_mode == "two_point":
        s = rng_s.integers(0, 2, size=(n, spec.m)) * (spec.T // 2)
    else:
        s = np.zeros((n, spec.m), dtype=np.int64)
    return b, s


def tent_paths(spec: TentSpec, b, s, length: int) -> np.ndarray:
    """Values ``f_b(s), ..., f_b(s + length - 1)`` for arrays of heights and phases."""
    b = np.asarray(b, dtype=np.float64)[..., None]
    s = np.asarray(s)[..., None]
    return tent_value(b, s + np.arange(length), spec.period)


def simulate_tent_panel(spec: TentSpec, seed=None) -> TimeSeriesPanel:
    b, s = tent_draw(spec, 1, seed)
    values = tent_paths(spec, b[0], s[0], spec.T)
    return TimeSeriesPanel(values, phase=s[0].tolist(), metadata={"process_spec": spec.to_dict()})


def tent_next_values(spec: TentSpec, seed=None) -> np.ndarray:
    """The deterministic value following each row of ``simulate_tent_panel(spec, seed)``."""
    b, s = tent_draw(spec, 1, seed)
    return tent_paths(spec, b[0], s[0], spec.T + 1)[:, -1]


# serialization


def spec_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind", "ar")
    if kind == "ar":
        if isinstance(d.get("noise_cov"), dict):
            d["noise_cov"] = covariance_from_dict(d["noise_cov"], d["m"])
        return ARCorrelatedSpec(**d)
    if kind == "tent":
        d["b_range"] = tuple(d.get("b_range", (0.0, 1.0)))
        return TentSpec(**d)
    raise ValueError(f"unknown process kind {kind!r}")


def covariance_from_dict(d: dict, m: int) -> np.ndarray:
    """Build a covariance from a compact description.

    ``{"type": "identity" | "hierarchical" | "geodesic" | "equicorrelated", "scale": s2, ...}``
    """
    kind = d.get("type", "identity")
    scale = float(d.get("scale", 1.0))
    if kind == "identity":
        cov = np.eye(m)
    elif kind == "hierarchical":
        D = int(round(np.log2(m)))
        if 2**D != m:
            raise ValueError("hierarchical covariance needs m a power of two")
        cov = hierarchical_covariance(D, d.get("decay_base"))
    elif kind == "geodesic":
        points = geodesic_grid(int(d.get("subdivisions", 0)))[:m]
        if len(points) != m:
            raise ValueError("not enough grid points for m")
        cov = geodesic_covariance(points, float(d.get("decay_base", m)))
    elif kind == "equicorrelated":
        rho = float(d["rho"])
        cov = (1 - rho) * np.eye(m) + rho * np.ones((m, m))
    else:
        raise ValueError(f"unknown covariance type {kind!r}")
    return scale * cov
