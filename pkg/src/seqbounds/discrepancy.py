"""Discrepancy estimators.

Suprema over hypotheses are searched with the shared optimizer and are
therefore lower bounds, except on the linear class with squared loss, where
the objective is a quadratic form and is maximized exactly whenever clipping
stays inactive at the maximizer.

Oracle quantities use the generating process: Gaussian autoregressive
conditionals are integrated in closed form (or by Monte Carlo on request) and
tent conditionals are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _rng
from ._gauss import expected_loss, expected_loss_unclipped
from ._optim import OptBudget, max_quadratic_on_ball, maximize
from .hypotheses import BoundedLoss, LinearClass, project_ball
from .panel import TimeSeriesPanel
from .processes import ARCorrelatedSpec, TentSpec, simulate_ar_fast, tent_draw, tent_paths

# relative tolerance for declaring clipping inactive at a closed-form maximizer
CLIP_TOL = 1e-9
# Gaussian targets always have some mass beyond the clip; below this change in
# the expected objective the clip is treated as inactive
CLIP_EXPECT_TOL = 1e-6


@dataclass
class DiscrepancyEstimate:
    value: float
    kind: str  # delta_oracle | delta_s | delta_e | delta_t | delta_local
    method: str  # closed_form_spectral | projected_gradient | random_search | monte_carlo
    stderr: Optional[float] = None
    argmax_members: Optional[list] = None
    exact: bool = False
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def provenance(self) -> str:
        return "exact" if self.exact else "optimizer lower bound"

    def to_dict(self):
        d = {
            "value": self.value,
            "kind": self.kind,
            "method": self.method,
            "stderr": self.stderr,
            "exact": self.exact,
            "provenance": self.provenance,
            "flags": list(self.flags),
        }
        if self.argmax_members is not None:
            d["argmax_members"] = self.argmax_members
        d.update(self.extra)
        return d


def _method(budget):
    return "projected_gradient" if budget.restarts > 0 and budget.iterations > 0 else "random_search"


def _is_linear_squared(cls, loss_spec):
    return isinstance(cls, LinearClass) and loss_spec.base == "squared"


def _trail(X, p):
    return np.ascontiguousarray(np.asarray(X, dtype=np.float64)[..., X.shape[-1] - p :])


# pair searches: sup over (h, h') of a weighted sum of L(h(x), h'(x))


def _pair_search(cls, loss_spec, groups, absolute, budget, seed, starts=()):
    """Maximize ``sum_g weight_g * mean_rows L(h(X_g), h'(X_g))`` (optionally its absolute value).

    ``groups`` is a list of ``(X, weight)``; rows of ``X`` are inputs.  Both
    losses depend on ``h(x) - h'(x)`` only, so for the linear class the search
    runs over ``v = w - w'`` in the ball of radius ``2 Lambda`` and the pair is
    recovered as ``(v/2, -v/2)``.
    """
    if isinstance(cls, LinearClass):
        radius = 2 * cls.lambda_cap
        Xs = [(_trail(X, cls.p), wgt) for X, wgt in groups]

        def f(thetas):
            total = 0.0
            for X, wgt in Xs:
                total = total + wgt * np.mean(loss_spec(thetas @ X.T, 0.0), axis=1)
            return np.abs(total) if absolute else total

        def sample(rng):
            return 2 * cls.sample(rng)

        starts = [np.asarray(s)[: cls.p] - np.asarray(s)[cls.p :] for s in starts]
        res = maximize(f, cls.p, lambda v: project_ball(v, radius), sample, budget, seed, starts)
        v = res.theta
        res.theta = np.concatenate([v / 2, -v / 2])
        return res, [cls.member(v / 2).to_dict(), cls.member(-v / 2).to_dict()]

    d = cls.dim

    def f(thetas):
        total = 0.0
        for X, wgt in groups:
            a = cls.predict_batch(thetas[:, :d], X)
            b = cls.predict_batch(thetas[:, d:], X)
            total = total + wgt * np.mean(loss_spec(a, b), axis=1)
        return np.abs(total) if absolute else total

    def project(theta):
        return np.concatenate([cls.project(theta[:d]), cls.project(theta[d:])])

    def sample(rng):
        return np.concatenate([cls.sample(rng), cls.sample(rng)])

    res = maximize(f, 2 * d, project, sample, budget, seed, starts)
    return res, [cls.member(res.theta[:d]).to_dict(), cls.member(res.theta[d:]).to_dict()]


def _pair_quadratic(lambda_cap, Q, absolute):
    """Closed form of ``sup_{w, w'} (w - w')' Q (w - w')`` over two Lambda-balls.

    ``v = w - w'`` ranges over the ball of radius ``2 Lambda``.
    """
    evals, U = np.linalg.eigh((Q + Q.T) / 2)
    k = int(np.argmax(np.abs(evals))) if absolute else int(np.argmax(evals))
    top = abs(evals[k]) if absolute else max(evals[k], 0.0)
    u = U[:, k] if top > 0 else np.zeros(Q.shape[0])
    return 4 * lambda_cap**2 * float(top), lambda_cap * u, -lambda_cap * u


def _clip_inactive(loss_spec, w, w2, Xs):
    cap = loss_spec.clip_cap
    for X in Xs:
        diff = X @ (w - w2)
        if np.max(diff * diff, initial=0.0) > cap * (1 + CLIP_TOL):
            return False
    return True


def _gram(X):
    X = np.asarray(X, dtype=np.float64)
    return X.T @ X / len(X)


# symmetric discrepancy


def delta_s(panel: TimeSeriesPanel, cls, loss_spec: BoundedLoss, opt_budget: Optional[OptBudget] = None,
            seed: int = 0) -> DiscrepancyEstimate:
    """Optimizer estimate of ``(1/m) sup |sum_i L(h(Y_1^T), h'(Y_1^T)) - L(h(Y_1^{T-1}), h'(Y_1^{T-1}))|``."""
    budget = opt_budget or OptBudget()
    if cls.p > panel.T - 1:
        raise ValueError("class window exceeds T-1")
    full, trunc = _trail(panel.values, cls.p), _trail(panel.values[:, :-1], cls.p)
    res, members = _pair_search(cls, loss_spec, [(full, 1.0), (trunc, -1.0)], True, budget, seed)
    return DiscrepancyEstimate(max(res.value, 0.0), "delta_s", _method(budget), argmax_members=members,
                               extra={"evaluations": res.evaluations})


def delta_s_linear_exact(panel: TimeSeriesPanel, lambda_cap: float, p: int,
                         loss_spec: Optional[BoundedLoss] = None, opt_budget: Optional[OptBudget] = None,
                         seed: int = 0) -> DiscrepancyEstimate:
    """``4 Lambda^2 rho(G_T - G_{T-1})`` for the linear class with squared loss.

    ``G`` are the second-moment matrices of the last ``p`` values of the full
    and truncated histories.  If clipping is active at the maximizer the
    optimizer estimate is returned instead, flagged ``clipping_active``.
    """
    loss_spec = loss_spec or BoundedLoss("squared", 1.0)
    if loss_spec.base != "squared":
        raise ValueError("the closed form needs the squared loss")
    if p > panel.T - 1:
        raise ValueError("window p exceeds T-1")
    full, trunc = _trail(panel.values, p), _trail(panel.values[:, :-1], p)
    value, w, w2 = _pair_quadratic(lambda_cap, _gram(full) - _gram(trunc), True)
    if _clip_inactive(loss_spec, w, w2, (full, trunc)):
        return DiscrepancyEstimate(value, "delta_s", "closed_form_spectral", exact=True,
                                   argmax_members=[{"kind": "linear", "w": w.tolist()},
                                                   {"kind": "linear", "w": w2.tolist()}])
    est = delta_s(panel, LinearClass(p, lambda_cap), loss_spec, opt_budget, seed)
    est.flags.append("clipping_active")
    est.extra["unclipped_closed_form"] = value
    return est


# expected discrepancy


def _mc_windows(spec, n_trials, seed, p):
    """Trailing windows at horizons T and T-1 for ``n_trials`` fresh panels, shape ``(n, m, p)``."""
    if isinstance(spec, ARCorrelatedSpec):
        Y = simulate_ar_fast(spec, n_trials, _rng.stream(seed, _rng.TRIAL))
    elif isinstance(spec, TentSpec):
        b, s = tent_draw(spec, n_trials, _rng.derive_seed(seed, _rng.TRIAL))
        Y = tent_paths(spec, b, s, spec.T)
    else:
        raise NotImplementedError("expected discrepancy needs a generative process spec")
    return _trail(Y, p), _trail(Y[..., :-1], p)


def delta_e_mc(spec, cls, loss_spec: BoundedLoss, n_trials: int = 2000, opt_budget: Optional[OptBudget] = None,
               seed: int = 0) -> DiscrepancyEstimate:
    """Monte-Carlo ``sup_{h,h'} E L(h(Y_1^T), h'(Y_1^T)) - E L(h(Y_1^{T-1}), h'(Y_1^{T-1}))``.

    ``stderr`` is the trial-level standard error of the difference at the
    maximizer.  The supremum includes ``h = h'`` so the value is at least 0.
    """
    budget = opt_budget or OptBudget()
    full, trunc = _mc_windows(spec, n_trials, seed, cls.p)
    n, m, p = full.shape
    fa, fb = full.reshape(-1, p), trunc.reshape(-1, p)

    route, flags, res_theta = None, [], None
    if _is_linear_squared(cls, loss_spec):
        value, w, w2 = _pair_quadratic(cls.lambda_cap, _gram(fa) - _gram(fb), False)
        if _clip_inactive(loss_spec, w, w2, (fa, fb)):
            route, theta = "closed_form_spectral", np.concatenate([w, w2])
        else:
            flags.append("clipping_active")
            res_theta = np.concatenate([w, w2])
    if route is None:
        zero = cls.project(np.zeros(cls.dim))
        starts = [np.concatenate([zero, zero])]
        if res_theta is not None:
            starts.append(res_theta)
        res, _ = _pair_search(cls, loss_spec, [(fa, 1.0), (fb, -1.0)], False, budget, seed, starts)
        route, theta, value = _method(budget), res.theta, res.value

    d = cls.dim
    diff = (loss_spec(cls.predict_batch(theta[:d], fa), cls.predict_batch(theta[d:], fa))
            - loss_spec(cls.predict_batch(theta[:d], fb), cls.predict_batch(theta[d:], fb)))[0]
    per_trial = diff.reshape(n, m).mean(axis=1)
    stderr = float(per_trial.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    members = [cls.member(theta[:d]).to_dict(), cls.member(theta[d:]).to_dict()]
    return DiscrepancyEstimate(max(float(value), 0.0), "delta_e", "monte_carlo", stderr, members,
                               exact=False, flags=flags,
                               extra={"route": route, "n_trials": n_trials})


# conditional laws of the generating process


@dataclass
class _Conditional:
    """Gaussian (``sd > 0``) or point-mass (``sd = 0``) targets for a batch of inputs."""

    X: np.ndarray
    mean: np.ndarray
    sd: np.ndarray


def _ar_conditional(spec: ARCorrelatedSpec, values, t):
    """Law of ``Y_t`` given ``Y_1^{t-1}`` for every series (1-based ``t``)."""
    if t - 1 < spec.p:
        raise ValueError(f"conditional at t={t} needs {spec.p} observed past values")
    return spec.conditional_mean(values[:, t - 1 - spec.p : t - 1]), spec.noise_sd


def _conditional(spec, panel, t, p_cls, tent_next=None):
    """Inputs (last ``p_cls`` values before ``t``) and the law of ``Y_t`` for each series.

    ``t`` may be ``T + 1``.
    """
    values = panel.values
    X = _trail(values[:, : t - 1], p_cls)
    if isinstance(spec, ARCorrelatedSpec):
        mean, sd = _ar_conditional(spec, values, t)
    elif isinstance(spec, TentSpec):
        mean = tent_next if t == panel.T + 1 else values[:, t - 1]
        sd = np.zeros(panel.m)
    else:
        raise NotImplementedError("oracle discrepancies need an AR or tent process spec")
    return _Conditional(X, np.asarray(mean, dtype=np.float64), np.broadcast_to(sd, (panel.m,)).astype(float))


def _row(cond, i):
    return _Conditional(cond.X[i : i + 1], cond.mean[i : i + 1], cond.sd[i : i + 1])


def _tent_next(spec, panel):
    """Value after each row, recovered from the row's phase and its observed height."""
    if not isinstance(spec, TentSpec):
        return None
    if panel.phase is None:
        raise ValueError("tent oracles need the panel's phase metadata")
    s = np.asarray(panel.phase)
    unit = tent_paths(spec, np.ones(panel.m), s, panel.T + 1)
    k = np.argmax(unit[:, :-1], axis=1)
    rows = np.arange(panel.m)
    b = panel.values[rows, k] / unit[rows, k]
    return b * unit[:, -1]


def oracle_risk(member, cond: _Conditional, loss_spec: BoundedLoss, rows=None) -> float:
    """``mean_i E[L(h(x_i), Y_i)]`` under the conditional laws."""
    X, mean, sd = cond.X, cond.mean, cond.sd
    if rows is not None:
        X, mean, sd = X[rows], mean[rows], sd[rows]
    return float(np.mean(expected_loss(loss_spec, member.predict(X), mean, sd)))


def _single_search(cls, loss_spec, terms, absolute, budget, seed, mc=None):
    """Maximize ``sum_terms weight * mean E[L(h(X), Y)]`` over single members.

    With ``mc=(n_samples, rng)`` expectations are Monte-Carlo averages with
    common random numbers, otherwise closed form.
    """
    draws = None
    if mc is not None:
        n_s, rng = mc
        draws = [c.mean[None, :] + c.sd[None, :] * rng.standard_normal((n_s, len(c.mean))) for c, _ in terms]

    def term_values(thetas):
        vals = []
        for k, (c, wgt) in enumerate(terms):
            pred = cls.predict_batch(thetas, c.X)  # (k, n)
            if draws is None:
                v = np.mean(expected_loss(loss_spec, pred, c.mean[None, :], c.sd[None, :]), axis=1)
            else:
                v = np.mean(loss_spec(pred[:, None, :], draws[k][None, :, :]), axis=(1, 2))
            vals.append(wgt * v)
        return vals

    def f(thetas):
        total = sum(term_values(thetas))
        return np.abs(total) if absolute else total

    res = maximize(f, cls.dim, cls.project, cls.sample, budget, seed)
    stderr = None
    if draws is not None:
        # per-draw objective at the maximizer for the standard error
        th = res.theta[None]
        per_draw = 0.0
        for k, (c, wgt) in enumerate(terms):
            pred = cls.predict_batch(th, c.X)[0]
            per_draw = per_draw + wgt * np.mean(loss_spec(pred[None, :], draws[k]), axis=1)
        stderr = float(np.std(per_draw, ddof=1) / np.sqrt(len(per_draw)))
    return res, stderr


def _single_quadratic(cls, terms, absolute):
    """Exact search for linear/squared when clipping is ignored.

    ``E(w.x - Y)^2 = (w.x - mu)^2 + sd^2`` so the objective is
    ``w'Qw + g'w + c``; with ``absolute`` both signs are maximized.
    """
    p = cls.p
    Q, g, c = np.zeros((p, p)), np.zeros(p), 0.0
    for cond, wgt in terms:
        n = len(cond.mean)
        Q += wgt * cond.X.T @ cond.X / n
        g += wgt * (-2.0) * cond.X.T @ cond.mean / n
        c += wgt * float(np.mean(cond.mean**2 + cond.sd**2))
    best = max_quadratic_on_ball(Q, g, c, cls.lambda_cap)
    if absolute:
        neg = max_quadratic_on_ball(-Q, -g, -c, cls.lambda_cap)
        if neg[0] > best[0]:
            best = neg
    return best


def _terms_value(cls, loss_spec, terms, theta, clipped=True):
    total = 0.0
    fn = expected_loss if clipped else expected_loss_unclipped
    for cond, wgt in terms:
        pred = cls.predict_batch(theta, cond.X)[0]
        total += wgt * float(np.mean(fn(loss_spec, pred, cond.mean, cond.sd)))
    return total


def _oracle_sup(cls, loss_spec, terms, absolute, budget, seed, method="exact", n_cond_samples=2000):
    """Shared driver for the oracle discrepancies; returns ``(value, method, stderr, member, flags)``."""
    flags = []
    if method == "exact" and _is_linear_squared(cls, loss_spec):
        val, w = _single_quadratic(cls, terms, absolute)
        clipped = _terms_value(cls, loss_spec, terms, w)
        unclipped = _terms_value(cls, loss_spec, terms, w, clipped=False)
        if abs(clipped - unclipped) <= CLIP_EXPECT_TOL:
            value = abs(clipped) if absolute else clipped
            return value, "closed_form_spectral", None, cls.member(w).to_dict(), flags, True
        flags.append("clipping_active")
    mc = None
    if method == "monte_carlo":
        mc = (n_cond_samples, _rng.stream(seed, _rng.COND))
    res, stderr = _single_search(cls, loss_spec, terms, absolute, budget, seed, mc)
    meth = "monte_carlo" if mc else _method(budget)
    return res.value, meth, stderr, cls.member(res.theta).to_dict(), flags, False


def delta_oracle(spec, panel: TimeSeriesPanel, cls, loss_spec: BoundedLoss, n_cond_samples: int = 2000,
                 opt_budget: Optional[OptBudget] = None, seed: int = 0, method: str = "exact") -> DiscrepancyEstimate:
    """``sup_h |L(h | Y) - L(h | Y')|`` from the generating process.

    ``L(h | Y)`` averages the conditional risk of the next value after the
    panel; ``L(h | Y')`` the conditional risk of the last panel value given
    the truncated panel.  ``method`` is ``"exact"`` (closed-form Gaussian
    expectations) or ``"monte_carlo"`` (``n_cond_samples`` draws, with stderr).
    """
    budget = opt_budget or OptBudget()
    T = panel.T
    nxt = _tent_next(spec, panel)
    terms = [(_conditional(spec, panel, T + 1, cls.p, nxt), 1.0), (_conditional(spec, panel, T, cls.p), -1.0)]
    value, meth, stderr, member, flags, exact = _oracle_sup(cls, loss_spec, terms, True, budget, seed, method,
                                                            n_cond_samples)
    return DiscrepancyEstimate(max(value, 0.0), "delta_oracle", meth, stderr, [member], exact, flags)


def conditional_risks(spec, panel: TimeSeriesPanel, member, loss_spec: BoundedLoss, p: int):
    """``(L(h | Y), L(h | Y'))`` for one member."""
    nxt = _tent_next(spec, panel)
    return (
        oracle_risk(member, _conditional(spec, panel, panel.T + 1, p, nxt), loss_spec),
        oracle_risk(member, _conditional(spec, panel, panel.T, p), loss_spec),
    )


def _first_oracle_t(spec, p):
    p_spec = spec.p if isinstance(spec, ARCorrelatedSpec) else 0
    return max(p, p_spec) + 1


def delta_local(panel: TimeSeriesPanel, i: int, cls, loss_spec: BoundedLoss, p: Optional[int] = None, spec=None,
                opt_budget: Optional[OptBudget] = None, seed: int = 0) -> DiscrepancyEstimate:
    """Local discrepancy of series ``i``.

    Oracle mode (``spec`` given):
    ``sup_h E[L(h(x_T), Y_{T+1}) | past] - mean_t E[L(h(x_{t-1}), Y_t) | past]``
    over ``t`` from ``max(p, p_spec) + 1`` to ``T``, where ``x_s`` is the last
    ``p`` values up to time ``s``.  The difference carries no absolute value;
    a negative supremum is clamped to 0 and flagged ``clamped``.

    Data mode (no spec): the label-free pair version
    ``sup_{h,h'} L(h(x_T), h'(x_T)) - mean_t L(h(x_{t-1}), h'(x_{t-1}))``.
    """
    budget = opt_budget or OptBudget()
    p = cls.p if p is None else p
    if p != cls.p:
        raise ValueError("window p must match the class window")
    T = panel.T
    if spec is None:
        X = _trail(np.lib.stride_tricks.sliding_window_view(panel.values[i], p), p)
        last, past = X[-1:], X[:-1]
        if _is_linear_squared(cls, loss_spec):
            value, w, w2 = _pair_quadratic(cls.lambda_cap, _gram(last) - _gram(past), False)
            if _clip_inactive(loss_spec, w, w2, (last, past)):
                return DiscrepancyEstimate(value, "delta_local", "closed_form_spectral", exact=True,
                                           flags=["data_proxy"], extra={"series": i})
        zero = cls.project(np.zeros(cls.dim))
        res, members = _pair_search(cls, loss_spec, [(last, 1.0), (past, -1.0)], False, budget, seed,
                                    [np.concatenate([zero, zero])])
        return DiscrepancyEstimate(max(res.value, 0.0), "delta_local", _method(budget), argmax_members=members,
                                   flags=["data_proxy"], extra={"series": i})

    t0 = _first_oracle_t(spec, p)
    if t0 > T:
        raise ValueError("series too short for the oracle local discrepancy")
    nxt = _tent_next(spec, panel)
    horizon = _row(_conditional(spec, panel, T + 1, p, nxt), i)
    past = [_row(_conditional(spec, panel, t, p), i) for t in range(t0, T + 1)]
    pooled = _Conditional(np.concatenate([c.X for c in past]), np.concatenate([c.mean for c in past]),
                          np.concatenate([c.sd for c in past]))
    terms = [(horizon, 1.0), (pooled, -1.0)]
    value, meth, stderr, member, flags, exact = _oracle_sup(cls, loss_spec, terms, False, budget, seed)
    if value < 0:
        flags.append("clamped")
    return DiscrepancyEstimate(max(value, 0.0), "delta_local", meth, stderr, [member], exact, flags,
                               extra={"series": i, "raw_value": value, "t_range": [t0, T]})


def mean_delta_local(panel, cls, loss_spec, spec=None, opt_budget=None, seed=0):
    ests = [delta_local(panel, i, cls, loss_spec, cls.p, spec, opt_budget, _rng.derive_seed(seed, i))
            for i in range(panel.m)]
    return float(np.mean([e.value for e in ests])), ests


def delta_t(spec, panel: TimeSeriesPanel, cls, loss_spec: BoundedLoss, t: int, p: Optional[int] = None,
            opt_budget: Optional[OptBudget] = None, seed: int = 0) -> DiscrepancyEstimate:
    """``(1/m) sup_h |sum_i E[L(h(x_{t-1}(i)), Y_t(i)) | past] - E[L(h(x_T(i)), Y_{T+1}(i)) | Y]|``.

    ``t`` must be at least ``max(p, p_spec) + 1`` so the conditional at ``t``
    is determined by observed values.  Without a spec the label-free proxy
    ``sup_{h,h'} |mean_i L(h(x_{t-1}), h'(x_{t-1})) - L(h(x_T), h'(x_T))|`` is used.
    """
    budget = opt_budget or OptBudget()
    p = cls.p if p is None else p
    T = panel.T
    if spec is None:
        if not p + 1 <= t <= T:
            raise ValueError(f"t must lie in [{p + 1}, {T}]")
        at_t = _trail(panel.values[:, : t - 1], p)
        at_T = _trail(panel.values, p)
        if _is_linear_squared(cls, loss_spec):
            value, w, w2 = _pair_quadratic(cls.lambda_cap, _gram(at_t) - _gram(at_T), True)
            if _clip_inactive(loss_spec, w, w2, (at_t, at_T)):
                return DiscrepancyEstimate(value, "delta_t", "closed_form_spectral", exact=True,
                                           flags=["data_proxy"], extra={"t": t})
        res, members = _pair_search(cls, loss_spec, [(at_t, 1.0), (at_T, -1.0)], True, budget, seed)
        return DiscrepancyEstimate(max(res.value, 0.0), "delta_t", _method(budget), argmax_members=members,
                                   flags=["data_proxy"], extra={"t": t})

    t0 = _first_oracle_t(spec, p)
    if not t0 <= t <= T:
        raise ValueError(f"t must lie in [{t0}, {T}] for the oracle conditionals")
    nxt = _tent_next(spec, panel)
    terms = [(_conditional(spec, panel, t, p), 1.0), (_conditional(spec, panel, T + 1, p, nxt), -1.0)]
    value, meth, stderr, member, flags, exact = _oracle_sup(cls, loss_spec, terms, True, budget, seed)
    return DiscrepancyEstimate(max(value, 0.0), "delta_t", meth, stderr, [member], exact, flags, extra={"t": t})


def mean_delta_t(spec, panel, cls, loss_spec, opt_budget=None, seed=0):
    """Average of ``delta_t`` over every admissible ``t``; returns ``(mean, estimates)``."""
    p = cls.p
    t0 = p + 1 if spec is None else _first_oracle_t(spec, p)
    ests = [delta_t(spec, panel, cls, loss_spec, t, p, opt_budget, _rng.derive_seed(seed, t))
            for t in range(t0, panel.T + 1)]
    return float(np.mean([e.value for e in ests])), ests
