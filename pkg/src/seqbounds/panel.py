"""Panel data model and the three dataset splits.

A panel holds ``m`` series of common length ``T``.  Time indices at the public
interface are 1-based (``t = 1..T``); series indices are ordinary 0-based row
indices.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Example:
    input: np.ndarray
    target: float
    series_index: int
    time_index: int


@dataclass(frozen=True, eq=False)
class TimeSeriesPanel:
    """Immutable ``m x T`` matrix of observations."""

    values: np.ndarray
    series_ids: tuple = ()
    phase: Optional[tuple] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("panel values must be a 2-D array")
        m, T = values.shape
        if m < 1 or T < 2:
            raise ValueError(f"panel needs m >= 1 and T >= 2, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("panel values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

        ids = tuple(self.series_ids) if len(self.series_ids) else tuple(str(i) for i in range(m))
        if len(ids) != m:
            raise ValueError("series_ids must have one entry per series")
        if len(set(ids)) != m:
            raise ValueError("series_ids must be distinct")
        object.__setattr__(self, "series_ids", ids)

        if self.phase is not None:
            phase = tuple(int(s) for s in self.phase)
            if len(phase) != m:
                raise ValueError("phase must have one entry per series")
            object.__setattr__(self, "phase", phase)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesPanel):
            return NotImplemented
        return (
            self.series_ids == other.series_ids
            and self.phase == other.phase
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.series_ids, self.values.tobytes()))

    def permute(self, order: Sequence[int]) -> "TimeSeriesPanel":
        order = list(order)
        phase = None if self.phase is None else [self.phase[k] for k in order]
        return TimeSeriesPanel(
            self.values[order], [self.series_ids[k] for k in order], phase, dict(self.metadata)
        )

    def truncated(self, T: int) -> "TimeSeriesPanel":
        """Panel restricted to its first ``T`` columns."""
        return TimeSeriesPanel(self.values[:, :T], self.series_ids, self.phase, dict(self.metadata))


def window(panel: TimeSeriesPanel, i: int, a: int, b: int) -> np.ndarray:
    """``(Y_a(i), ..., Y_b(i))`` with 1-based inclusive time bounds."""
    if not 0 <= i < panel.m:
        raise IndexError(f"series index {i} out of range [0, {panel.m})")
    if not 1 <= a <= b <= panel.T:
        raise IndexError(f"window [{a}, {b}] outside [1, {panel.T}]")
    return panel.values[i, a - 1 : b].copy()


def seq2seq_examples(panel: TimeSeriesPanel) -> list[Example]:
    T = panel.T
    return [
        Example(panel.values[i, : T - 1].copy(), float(panel.values[i, T - 1]), i, T)
        for i in range(panel.m)
    ]


def _check_lag(panel, p):
    if not 1 <= p < panel.T:
        raise ValueError(f"lag order p={p} must satisfy 1 <= p < T={panel.T}")


def local_examples(panel: TimeSeriesPanel, i: int, p: int) -> list[Example]:
    """Sliding lag-``p`` examples of series ``i``; one per ``t = p+1..T``."""
    _check_lag(panel, p)
    if not 0 <= i < panel.m:
        raise IndexError(f"series index {i} out of range [0, {panel.m})")
    row = panel.values[i]
    return [
        Example(row[t - 1 - p : t - 1].copy(), float(row[t - 1]), i, t)
        for t in range(p + 1, panel.T + 1)
    ]


def hybrid_examples(panel: TimeSeriesPanel, p: int) -> list[Example]:
    _check_lag(panel, p)
    out = []
    for i in range(panel.m):
        out.extend(local_examples(panel, i, p))
    return out


# array views used on hot paths


def seq2seq_arrays(panel: TimeSeriesPanel):
    return panel.values[:, :-1], panel.values[:, -1]


def lag_windows(values: np.ndarray, p: int):
    """All lag-``p`` windows of a 1-D or 2-D array along its last axis.

    Returns ``(X, y)`` where ``X[..., k, :]`` is the window preceding target
    ``y[..., k]``.
    """
    values = np.asarray(values, dtype=np.float64)
    X = np.lib.stride_tricks.sliding_window_view(values[..., :-1], p, axis=-1)
    return X, values[..., p:]


def local_arrays(panel: TimeSeriesPanel, i: int, p: int):
    _check_lag(panel, p)
    return lag_windows(panel.values[i], p)


def hybrid_arrays(panel: TimeSeriesPanel, p: int):
    _check_lag(panel, p)
    X, y = lag_windows(panel.values, p)
    return X.reshape(-1, p), y.reshape(-1)


def as_arrays(examples):
    """``(X, y)`` from a list of :class:`Example` or an ``(X, y)`` pair.

    Inputs of unequal length are right-aligned and zero-padded on the left;
    hypotheses only read trailing coordinates.
    """
    if isinstance(examples, tuple) and len(examples) == 2:
        X, y = examples
        return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if len(examples) == 0:
        raise ValueError("no examples")
    width = max(len(e.input) for e in examples)
    X = np.zeros((len(examples), width))
    for k, e in enumerate(examples):
        X[k, width - len(e.input) :] = e.input
    y = np.array([e.target for e in examples], dtype=np.float64)
    return X, y


# persistence


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def save_panel(panel: TimeSeriesPanel, path, process_spec: Optional[dict] = None) -> None:
    """Write ``series_id,t1..tT`` CSV (round-trip exact) plus optional sidecar JSON."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id"] + [f"t{t}" for t in range(1, panel.T + 1)])
        for sid, row in zip(panel.series_ids, panel.values):
            writer.writerow([sid] + [repr(float(v)) for v in row])
    meta = {}
    if panel.phase is not None:
        meta["phase"] = list(panel.phase)
    if process_spec is not None:
        meta["process_spec"] = process_spec
    if meta:
        _sidecar(path).write_text(json.dumps(meta, sort_keys=True, indent=2))


def load_panel(path) -> TimeSeriesPanel:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "series_id":
            raise ValueError(f"{path}: expected header starting with 'series_id'")
        ids, rows = [], []
        for rec in reader:
            if not rec:
                continue
            ids.append(rec[0])
            rows.append([float(v) for v in rec[1:]])
    phase, metadata = None, {}
    side = _sidecar(path)
    if side.exists():
        meta = json.loads(side.read_text())
        phase = meta.get("phase")
        if "process_spec" in meta:
            metadata["process_spec"] = meta["process_spec"]
    return TimeSeriesPanel(np.array(rows), ids, phase, metadata)
