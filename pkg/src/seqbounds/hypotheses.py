"""Hypothesis classes, clipped losses and closed-form ERM.

Every class reads only the trailing coordinates of its input, so the same
member can be applied to histories of different lengths.  Classes expose a
flat parameter vector ``theta`` together with ``project`` and ``sample`` so the
suprema in the discrepancy and complexity modules can search over members.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .panel import as_arrays


def _trailing(X, p):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[-1] < p:
        raise ValueError(f"input length {X.shape[-1]} is shorter than the window p={p}")
    return X[..., X.shape[-1] - p :]


def _uniform_ball(rng, dim, radius):
    z = rng.standard_normal(dim)
    n = np.linalg.norm(z)
    u = rng.uniform()
    if n == 0:
        return z
    return z / n * radius * u ** (1.0 / dim)


# classes


@dataclass(frozen=True)
class LinearClass:
    """``{x -> w . x_last_p : ||w|| <= lambda_cap}``."""

    p: int
    lambda_cap: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("window p must be >= 1")
        if not self.lambda_cap > 0:
            raise ValueError("lambda_cap must be positive")

    @property
    def dim(self) -> int:
        return self.p

    def project(self, theta):
        return project_ball(theta, self.lambda_cap)

    def sample(self, rng):
        return _uniform_ball(rng, self.p, self.lambda_cap)

    def predict_batch(self, thetas, X):
        """Predictions of ``k`` members on ``n`` inputs, shape ``(k, n)``."""
        return np.atleast_2d(thetas) @ _trailing(X, self.p).T

    def member(self, theta) -> "LinearMember":
        return LinearMember(np.asarray(theta, dtype=np.float64).copy())

    def to_dict(self):
        return {"kind": "linear", "p": self.p, "lambda_cap": self.lambda_cap}


@dataclass(frozen=True)
class OffsetClass:
    """``{x -> x_last + c : c in [0, 1]}``."""

    @property
    def dim(self) -> int:
        return 1

    @property
    def p(self) -> int:
        return 1

    def project(self, theta):
        return np.clip(theta, 0.0, 1.0)

    def sample(self, rng):
        return rng.uniform(0.0, 1.0, size=1)

    def predict_batch(self, thetas, X):
        last = _trailing(X, 1)[:, 0]
        return last[None, :] + np.atleast_2d(thetas)[:, :1]

    def member(self, theta) -> "OffsetMember":
        return OffsetMember(float(np.ravel(theta)[0]))

    def to_dict(self):
        return {"kind": "offset"}


@dataclass(frozen=True)
class ReluNetClass:
    """Bias-free ReLU network with widths ``(p, h_1, ..., 1)``.

    Members satisfy ``prod_k ||W_k||_F <= gamma``.
    """

    layer_widths: tuple
    gamma: float = 1.0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 2 or min(widths) < 1 or widths[-1] != 1:
            raise ValueError("layer_widths must be (p, ..., 1) with positive entries")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        object.__setattr__(self, "layer_widths", widths)

    @property
    def depth(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def p(self) -> int:
        return self.layer_widths[0]

    @property
    def shapes(self):
        w = self.layer_widths
        return [(w[k + 1], w[k]) for k in range(self.depth)]

    @property
    def dim(self) -> int:
        return sum(a * b for a, b in self.shapes)

    def unflatten(self, theta):
        out, pos = [], 0
        for a, b in self.shapes:
            out.append(np.asarray(theta[pos : pos + a * b]).reshape(a, b))
            pos += a * b
        return out

    def project(self, theta):
        # rescale every layer by the same factor; exact for the product constraint
        mats = self.unflatten(theta)
        norms = [np.linalg.norm(W) for W in mats]
        prod = float(np.prod(norms))
        if prod <= self.gamma:
            return np.asarray(theta, dtype=np.float64)
        scale = (self.gamma / prod) ** (1.0 / self.depth) if prod > 0 else 0.0
        return np.asarray(theta, dtype=np.float64) * scale

    def sample(self, rng):
        theta = rng.standard_normal(self.dim)
        mats = self.unflatten(theta)
        prod = float(np.prod([np.linalg.norm(W) for W in mats]))
        target = self.gamma * rng.uniform()
        return theta * (target / prod) ** (1.0 / self.depth) if prod > 0 else theta

    def forward(self, theta, X):
        h = _trailing(X, self.p).T
        mats = self.unflatten(theta)
        for W in mats[:-1]:
            h = np.maximum(W @ h, 0.0)
        return (mats[-1] @ h)[0]

    def predict_batch(self, thetas, X):
        return np.stack([self.forward(t, X) for t in np.atleast_2d(thetas)])

    def member(self, theta) -> "ReluNetMember":
        return ReluNetMember(tuple(W.copy() for W in self.unflatten(theta)))

    def to_dict(self):
        return {"kind": "relu", "layer_widths": list(self.layer_widths), "gamma": self.gamma}


def class_from_dict(d: dict):
    kind = d.get("kind", "linear")
    if kind == "linear":
        return LinearClass(int(d["p"]), float(d.get("lambda_cap", 1.0)))
    if kind == "offset":
        return OffsetClass()
    if kind == "relu":
        return ReluNetClass(tuple(d["layer_widths"]), float(d.get("gamma", 1.0)))
    raise ValueError(f"unknown hypothesis class {kind!r}")


def project_ball(w, radius):
    w = np.asarray(w, dtype=np.float64)
    n = np.linalg.norm(w)
    # a rescaled vector may land a few ulps outside; treat that as feasible so projection is idempotent
    return w if n <= radius * (1 + 8 * np.finfo(float).eps) else w * (radius / n)


# members


@dataclass(frozen=True, eq=False)
class LinearMember:
    w: np.ndarray

    def predict(self, X):
        return _trailing(X, len(self.w)) @ self.w

    def to_dict(self):
        return {"kind": "linear", "w": self.w.tolist()}


@dataclass(frozen=True)
class OffsetMember:
    c: float

    def predict(self, X):
        return _trailing(X, 1)[:, 0] + self.c

    def to_dict(self):
        return {"kind": "offset", "c": self.c}


@dataclass(frozen=True, eq=False)
class ReluNetMember:
    weights: tuple

    def predict(self, X):
        h = _trailing(X, self.weights[0].shape[1]).T
        for W in self.weights[:-1]:
            h = np.maximum(W @ h, 0.0)
        return (self.weights[-1] @ h)[0]

    def to_dict(self):
        return {"kind": "relu", "weights": [W.tolist() for W in self.weights]}


def member_from_dict(d: dict):
    kind = d["kind"]
    if kind == "linear":
        return LinearMember(np.array(d["w"], dtype=np.float64))
    if kind == "offset":
        return OffsetMember(float(d["c"]))
    if kind == "relu":
        return ReluNetMember(tuple(np.array(W, dtype=np.float64) for W in d["weights"]))
    raise ValueError(f"unknown member kind {kind!r}")


def predict(member, x):
    """Prediction for one input vector, or a vector of predictions for a 2-D array."""
    x = np.asarray(x, dtype=np.float64)
    out = member.predict(np.atleast_2d(x))
    return float(out[0]) if x.ndim == 1 else out


# losses


@dataclass(frozen=True)
class BoundedLoss:
    """Squared or absolute loss clipped at ``clip_cap``."""

    base: str = "squared"
    clip_cap: float = 1.0

    def __post_init__(self):
        if self.base not in ("squared", "absolute"):
            raise ValueError("loss base must be 'squared' or 'absolute'")
        if not self.clip_cap > 0:
            raise ValueError("clip_cap must be positive")

    def __call__(self, yhat, y):
        d = np.asarray(yhat, dtype=np.float64) - np.asarray(y, dtype=np.float64)
        raw = d * d if self.base == "squared" else np.abs(d)
        return np.minimum(raw, self.clip_cap)

    def unclipped(self, yhat, y):
        d = np.asarray(yhat, dtype=np.float64) - np.asarray(y, dtype=np.float64)
        return d * d if self.base == "squared" else np.abs(d)

    def lipschitz(self, radius: float) -> float:
        """Lipschitz constant in the prediction when predictions and targets lie in ``[-radius, radius]``."""
        if self.base == "absolute":
            return 1.0
        return min(4.0 * radius, 2.0 * np.sqrt(self.clip_cap))

    def to_dict(self):
        return {"base": self.base, "clip_cap": self.clip_cap}


def loss(loss_spec: BoundedLoss, yhat, y):
    out = loss_spec(yhat, y)
    return float(out) if np.ndim(out) == 0 else out


# fitting


def fit_linear_erm(examples, cls: LinearClass, ridge: float = 0.0) -> LinearMember:
    """Ridge least squares on the trailing ``p`` inputs, projected onto the Lambda-ball."""
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    X, y = as_arrays(examples)
    X = _trailing(X, cls.p)
    if ridge > 0:
        w = np.linalg.solve(X.T @ X + ridge * np.eye(cls.p), X.T @ y)
    else:
        w = np.linalg.lstsq(X, y, rcond=None)[0]
    return LinearMember(project_ball(w, cls.lambda_cap))


def fit_offset(examples) -> OffsetMember:
    X, y = as_arrays(examples)
    return OffsetMember(float(np.clip(np.mean(y - X[:, -1]), 0.0, 1.0)))


def erm_risk(examples, member, loss_spec: BoundedLoss) -> float:
    X, y = as_arrays(examples)
    return float(np.mean(loss_spec(member.predict(X), y)))

