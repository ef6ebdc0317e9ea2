"""Partitions of the series into weakly dependent collections, and tangent samples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .processes import ARCorrelatedSpec, TentSpec, geodesic_distance, simulate_ar_panel, simulate_tent_panel


@dataclass(frozen=True)
class Partition:
    index_sets: tuple
    construction: str = "custom"
    d0: float = float("nan")
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        sets = tuple(tuple(sorted(int(i) for i in s)) for s in self.index_sets)
        if not sets or any(len(s) == 0 for s in sets):
            raise ValueError("partition collections must be non-empty")
        flat = [i for s in sets for i in s]
        if len(flat) != len(set(flat)):
            raise ValueError("partition collections must be disjoint")
        if sorted(flat) != list(range(len(flat))):
            raise ValueError("partition must cover 0..m-1")
        object.__setattr__(self, "index_sets", sets)

    @property
    def k(self) -> int:
        return len(self.index_sets)

    @property
    def m(self) -> int:
        return sum(len(s) for s in self.index_sets)

    @property
    def sizes(self) -> list:
        return [len(s) for s in self.index_sets]

    @property
    def min_size(self) -> int:
        return min(self.sizes)

    def to_dict(self):
        d = {"index_sets": [list(s) for s in self.index_sets], "construction": self.construction}
        if not math.isnan(self.d0):
            d["d0"] = self.d0
        d.update(self.params)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["index_sets"]), d.get("construction", "custom"), d.get("d0", float("nan")))


def whole_partition(m: int) -> Partition:
    return Partition((tuple(range(m)),), "whole")


def singleton_partition(m: int) -> Partition:
    return Partition(tuple((i,) for i in range(m)), "singleton")


def hierarchical_partition(D: int, d: int) -> Partition:
    """``2**d`` collections; leaf ``l`` goes to collection ``l mod 2**d``."""
    if not 0 <= d <= D:
        raise ValueError("need 0 <= d <= D")
    k = 2**d
    sets = tuple(tuple(range(j, 2**D, k)) for j in range(k))
    return Partition(sets, "hierarchical", params={"D": D, "d": d})


def _min_pairwise(dist, idx):
    if len(idx) < 2:
        return math.pi
    block = dist[np.ix_(idx, idx)]
    return float(np.min(block[~np.eye(len(idx), dtype=bool)]))


def geodesic_partition(grid_points, k: int) -> Partition:
    """Greedy max-min assignment with capacity ``ceil(m/k)``; ties go to the lowest collection.

    ``d0`` is the smallest in-collection geodesic distance (``pi`` if every
    collection is a singleton).
    """
    points = np.asarray(grid_points, dtype=np.float64)
    m = len(points)
    if not 1 <= k <= m:
        raise ValueError("need 1 <= k <= m")
    dist = geodesic_distance(points)
    cap = -(-m // k)
    sets = [[] for _ in range(k)]
    for i in range(m):
        best, best_score = None, -1.0
        for j, members in enumerate(sets):
            if len(members) >= cap:
                continue
            score = math.inf if not members else float(np.min(dist[i, members]))
            if score > best_score:
                best, best_score = j, score
        sets[best].append(i)
    sets = [s for s in sets if s]
    d0 = min(_min_pairwise(dist, s) for s in sets)
    return Partition(tuple(tuple(s) for s in sets), "geodesic_greedy", d0, params={"k": k})


def tangent_sample(spec, collection, seed: int) -> np.ndarray:
    """Rows of ``collection`` drawn from independent copies of the process.

    Row ``r`` is taken from a fresh panel simulated with its own derived seed,
    so rows keep their marginals and are mutually independent.
    """
    if isinstance(spec, ARCorrelatedSpec):
        sim = simulate_ar_panel
    elif isinstance(spec, TentSpec):
        sim = simulate_tent_panel
    else:
        raise NotImplementedError("tangent samples need a generative process spec")
    rows = []
    for i in collection:
        panel = sim(spec, seed=_rng.derive_seed(seed, _rng.TANGENT, int(i)))
        rows.append(panel.values[int(i)])
    return np.stack(rows)
