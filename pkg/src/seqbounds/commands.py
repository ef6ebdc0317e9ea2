"""Command implementations behind the CLI.

Every command takes a resolved configuration dictionary and returns a report
dictionary ``{"command", "version", "config", "result"}``; tabular commands
also return CSV rows under ``result["rows"]``.  Reports contain no timestamps
and all randomness is derived from ``config["seed"]``.
"""

from __future__ import annotations

import copy
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from itertools import product

import numpy as np

from . import __version__, _rng
from ._gauss import expected_loss
from ._optim import OptBudget
from .bounds import (
    hybrid_b1,
    hybrid_b2,
    prop2_delta_s_bound,
    thm1_s2s_bound,
    thm2_independent_bound,
    thm3_local_bound,
    thm4_hybrid_bound,
)
from .complexity import (
    empirical_rademacher,
    linear_rademacher_bound,
    linear_seq_covering_log,
    relu_net_rademacher_bound,
)
from .discrepancy import (
    _conditional,
    _tent_next,
    conditional_risks,
    delta_e_mc,
    delta_local,
    delta_oracle,
    delta_s,
    delta_s_linear_exact,
    delta_t,
    mean_delta_local,
    mean_delta_t,
    oracle_risk,
)
from .hypotheses import BoundedLoss, LinearClass, OffsetClass, class_from_dict, fit_linear_erm, fit_offset
from .mixing import (
    analytic_beta_s2s,
    beta_mass,
    collection_beta,
    numeric_tv_bivariate_gaussian,
    proof_constant_beta,
)
from .panel import (
    TimeSeriesPanel,
    hybrid_arrays,
    load_panel,
    local_arrays,
    seq2seq_arrays,
)
from .partitions import (
    Partition,
    geodesic_partition,
    hierarchical_partition,
    singleton_partition,
    whole_partition,
)
from .processes import (
    ARCorrelatedSpec,
    TentSpec,
    geodesic_grid,
    simulate_ar_panel,
    simulate_tent_panel,
    spec_from_dict,
)


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (exit code 2)."""


TIE_ORDER = ("hybrid", "seq2seq", "local")

DEFAULT_PROCESS = {
    "kind": "ar",
    "m": 50,
    "T": 20,
    "p": 2,
    "weights": [0.2, 0.5],
    "noise_cov": {"type": "identity", "scale": 0.0025},
    "burn_in": 200,
}

DEFAULTS = {
    "simulate": {"process": DEFAULT_PROCESS},
    "estimate-discrepancy": {
        "kind": "delta_s",
        "process": DEFAULT_PROCESS,
        "class": {"kind": "linear", "p": 2, "lambda_cap": 1.0},
        "loss": {"base": "squared", "clip_cap": 1.0},
        "n_trials": 2000,
        "n_cond_samples": 2000,
        "oracle_method": "exact",
        "series": 0,
        "t": None,
    },
    "estimate-mixing": {"kind": "analytic", "sigma": 0.1, "sigma0": 0.3, "grid_halfwidth": 8.0,
                        "grid_step": 0.005, "process": DEFAULT_PROCESS, "partition": {"type": "whole"}},
    "estimate-complexity": {
        "kind": "linear_closed_form",
        "process": DEFAULT_PROCESS,
        "split": "seq2seq",
        "class": {"kind": "linear", "p": 2, "lambda_cap": 1.0},
        "loss": {"base": "squared", "clip_cap": 1.0},
        "n_sigma_draws": 100,
        "alpha": None,
    },
    "evaluate-bounds": {"theorem": "thm2_independent",
                        "ingredients": {"rademacher": 0.0, "delta_disc": 0.0, "m": 100, "delta_conf": 0.05}},
    "validate-bound": {
        "theorem": "thm2_independent",
        "process": {**DEFAULT_PROCESS, "m": 200, "T": 10},
        "class": {"kind": "linear", "p": 2, "lambda_cap": 1.0},
        "loss": {"base": "squared", "clip_cap": 1.0},
        "partition": {"type": "whole"},
        "delta": 0.1,
        "n_repetitions": 100,
        "ridge": 1e-6,
    },
    "regime-experiment": {
        "process": {**DEFAULT_PROCESS},
        "cells": [[500, 10], [10, 500]],
        "n_seeds": 20,
        "class": {"kind": "linear", "p": 2, "lambda_cap": 1.0},
        "loss": {"base": "squared", "clip_cap": 1.0},
        "partition": {"type": "whole"},
        "delta": 0.05,
        "alpha": "auto",
        "ridge": 1e-6,
    },
    "advise": {
        "mode": "data",
        "panel": None,
        "process": DEFAULT_PROCESS,
        "class": {"kind": "linear", "p": 2, "lambda_cap": 1.0},
        "loss": {"base": "squared", "clip_cap": 1.0},
        "partition": {"type": "whole"},
        "betas": None,
        "delta": 0.05,
        "alpha": "auto",
        "ridge": 1e-6,
        "candidates": ["hybrid", "seq2seq", "local"],
    },
    "yu-check": {"n_states": 4, "n_random": 100, "joint": None, "f": None, "weight_max": 50},
    "tent-example": {"m": 20, "T": 8, "n_trials": 500, "grid_step": 0.001, "lambda_cap": 1.0, "p": 2,
                     "loss": {"base": "squared", "clip_cap": 1.0}},
}
COMMON = {"seed": 0, "workers": 1, "opt_budget": {}}


# configuration helpers


def resolve_config(command: str, config: dict) -> dict:
    if command not in DEFAULTS:
        raise ConfigError(f"unknown command {command!r}")
    merged = copy.deepcopy(COMMON)
    merged.update(copy.deepcopy(DEFAULTS[command]))
    for key, val in (config or {}).items():
        if isinstance(val, dict) and isinstance(merged.get(key), dict) and key not in ("ingredients",):
            merged[key] = {**merged[key], **val}
        else:
            merged[key] = val
    delta = merged.get("delta")
    if delta is not None and not 0 < float(delta) < 1:
        raise ConfigError("delta must lie in (0, 1)")
    return merged


def _budget(cfg) -> OptBudget:
    try:
        return OptBudget(**(cfg.get("opt_budget") or {}))
    except TypeError as exc:
        raise ConfigError(f"bad opt_budget: {exc}") from exc


def _spec(cfg, seed=None, **override):
    d = dict(cfg["process"])
    d.update(override)
    d["seed"] = int(cfg["seed"] if seed is None else seed)
    try:
        return spec_from_dict(d)
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad process spec: {exc}") from exc


def _class(cfg):
    try:
        return class_from_dict(cfg["class"])
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad hypothesis class: {exc}") from exc


def _loss(cfg):
    try:
        return BoundedLoss(**cfg["loss"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad loss: {exc}") from exc


def _partition(cfg, m) -> Partition:
    d = cfg.get("partition") or {"type": "whole"}
    kind = d.get("type", "whole")
    if kind == "whole":
        return whole_partition(m)
    if kind == "singleton":
        return singleton_partition(m)
    if kind == "hierarchical":
        D = int(round(math.log2(m)))
        if 2**D != m:
            raise ConfigError("hierarchical partition needs m a power of two")
        return hierarchical_partition(D, int(d["d"]))
    if kind == "geodesic":
        points = geodesic_grid(int(d.get("subdivisions", 0)))[:m]
        return geodesic_partition(points, int(d["k"]))
    if kind == "explicit":
        return Partition(tuple(d["index_sets"]), "explicit")
    raise ConfigError(f"unknown partition type {kind!r}")


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _report(command, cfg, result):
    return {"command": command, "version": __version__, "config": cfg, "result": result}


def _panel_or_spec(cfg):
    if cfg.get("panel"):
        return load_panel(cfg["panel"]), None
    spec = _spec(cfg)
    return simulate(spec), spec


def simulate(spec) -> TimeSeriesPanel:
    if isinstance(spec, TentSpec):
        return simulate_tent_panel(spec)
    return simulate_ar_panel(spec)


def _clip_fraction(loss_spec, pred, y):
    return float(np.mean(loss_spec.unclipped(pred, y) > loss_spec.clip_cap))


# simulate


def cmd_simulate(cfg):
    spec = _spec(cfg)
    panel = simulate(spec)
    result = {
        "m": panel.m,
        "T": panel.T,
        "series_ids": list(panel.series_ids),
        "values": panel.values.tolist(),
        "phase": None if panel.phase is None else list(panel.phase),
        "process_spec": spec.to_dict(),
    }
    return _report("simulate", cfg, result)


# estimators


def cmd_estimate_discrepancy(cfg):
    kind = cfg["kind"]
    cls, loss_spec, budget, seed = _class(cfg), _loss(cfg), _budget(cfg), int(cfg["seed"])
    panel, spec = _panel_or_spec(cfg)
    if kind == "delta_s":
        est = delta_s(panel, cls, loss_spec, budget, seed)
    elif kind == "delta_s_exact":
        if not isinstance(cls, LinearClass):
            raise ConfigError("delta_s_exact needs the linear class")
        est = delta_s_linear_exact(panel, cls.lambda_cap, cls.p, loss_spec, budget, seed)
    elif kind in ("delta_e", "delta_oracle", "delta_t") and spec is None:
        raise ConfigError(f"{kind} needs a generative process spec")
    elif kind == "delta_e":
        est = delta_e_mc(spec, cls, loss_spec, int(cfg["n_trials"]), budget, seed)
    elif kind == "delta_oracle":
        est = delta_oracle(spec, panel, cls, loss_spec, int(cfg["n_cond_samples"]), budget, seed,
                           cfg["oracle_method"])
    elif kind == "delta_local":
        est = delta_local(panel, int(cfg["series"]), cls, loss_spec, cls.p, spec, budget, seed)
    elif kind == "delta_t":
        if cfg.get("t") is None:
            value, ests = mean_delta_t(spec, panel, cls, loss_spec, budget, seed)
            return _report("estimate-discrepancy", cfg,
                           {"kind": "delta_t", "mean": value, "per_t": [e.to_dict() for e in ests]})
        est = delta_t(spec, panel, cls, loss_spec, int(cfg["t"]), cls.p, budget, seed)
    else:
        raise ConfigError(f"unknown discrepancy kind {kind!r}")
    return _report("estimate-discrepancy", cfg, est.to_dict())


def cmd_estimate_mixing(cfg):
    kind = cfg["kind"]
    if kind == "analytic":
        s, s0 = float(cfg["sigma"]), float(cfg["sigma0"])
        try:
            statement = analytic_beta_s2s(s, s0)
            proof = proof_constant_beta(s)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        result = {"kind": "analytic_lemma2", "sigma": s, "sigma0": s0, "value": statement,
                  "proof_constant_value": proof, "upper": max(statement, proof)}
    elif kind == "numeric":
        result = numeric_tv_bivariate_gaussian(float(cfg["sigma"]), float(cfg["grid_halfwidth"]),
                                               float(cfg["grid_step"])).to_dict()
    elif kind == "collection":
        spec = _spec(cfg)
        if not isinstance(spec, ARCorrelatedSpec):
            raise ConfigError("collection betas need an AR spec")
        part = _partition(cfg, spec.m)
        betas = collection_beta(spec.noise_cov, part)
        result = {"partition": part.to_dict(), "betas": [b.to_dict() for b in betas],
                  "beta_mass": beta_mass(part, betas), "applicable": all(b.applicable for b in betas)}
    else:
        raise ConfigError(f"unknown mixing kind {kind!r}")
    return _report("estimate-mixing", cfg, result)


def _split_arrays(panel, split, p):
    if split == "seq2seq":
        return seq2seq_arrays(panel)
    if split == "hybrid":
        return hybrid_arrays(panel, p)
    if split == "local":
        return local_arrays(panel, 0, p)
    raise ConfigError(f"unknown split {split!r}")


def cmd_estimate_complexity(cfg):
    kind = cfg["kind"]
    cls, loss_spec = _class(cfg), _loss(cfg)
    panel, _ = _panel_or_spec(cfg)
    examples = _split_arrays(panel, cfg["split"], cls.p)
    if kind == "linear_closed_form":
        if not isinstance(cls, LinearClass):
            raise ConfigError("linear_closed_form needs the linear class")
        est = linear_rademacher_bound(cls.lambda_cap, examples, loss_spec, cls.p)
    elif kind == "relu_closed_form":
        est = relu_net_rademacher_bound(cls.depth, cls.gamma, examples, cls.p, loss_spec)
    elif kind == "empirical_rademacher":
        est = empirical_rademacher(examples, cls, loss_spec, int(cfg["n_sigma_draws"]), _budget(cfg),
                                   int(cfg["seed"]))
    elif kind == "covering_log":
        alpha = cfg.get("alpha") or 1 / math.sqrt(panel.T)
        X = examples[0][:, -cls.p :]
        radius = float(np.max(np.linalg.norm(X, axis=1)))
        est = linear_seq_covering_log(float(alpha), cls.lambda_cap, radius, cls.p, panel.T)
    else:
        raise ConfigError(f"unknown complexity kind {kind!r}")
    return _report("estimate-complexity", cfg, est.to_dict())


_EVALUATORS = {
    "thm1_s2s": thm1_s2s_bound,
    "thm2_independent": thm2_independent_bound,
    "thm3_local": thm3_local_bound,
    "thm4_hybrid": thm4_hybrid_bound,
    "prop2_delta_s": prop2_delta_s_bound,
}


def cmd_evaluate_bounds(cfg):
    name = cfg["theorem"]
    if name not in _EVALUATORS:
        raise ConfigError(f"unknown theorem {name!r}")
    try:
        rep = _EVALUATORS[name](**cfg["ingredients"])
    except TypeError as exc:
        raise ConfigError(f"bad ingredients for {name}: {exc}") from exc
    return _report("evaluate-bounds", cfg, rep.to_dict())


# methodology bounds shared by the regime experiment and the advisor


def _fit(cls, X, y, ridge):
    if isinstance(cls, OffsetClass):
        return fit_offset((X, y))
    if isinstance(cls, LinearClass):
        return fit_linear_erm((X, y), cls, ridge)
    raise ConfigError("methodology bounds support the linear and offset classes")


def _auto_alpha(alpha, T):
    return 1 / math.sqrt(T) if alpha in (None, "auto") else float(alpha)


def methodology_bounds(panel, spec, cls, loss_spec, delta, partition, alpha="auto", ridge=1e-6, betas=None,
                       budget=None, seed=0, candidates=TIE_ORDER):
    """Fit each methodology and evaluate its bound.

    With ``spec`` the discrepancies come from the generating process (oracle
    mode); without it the label-free data proxies are used.  Returns a dict
    keyed by methodology with the fitted members, empirical risk, bound report
    and ``total = empirical risk + bound``.
    """
    if not isinstance(cls, LinearClass):
        raise ConfigError("methodology bounds need the linear class")
    budget = budget or OptBudget()
    m, T, p = panel.m, panel.T, cls.p
    alpha = _auto_alpha(alpha, T)
    flags = []
    if betas is None:
        if isinstance(spec, ARCorrelatedSpec):
            betas = collection_beta(spec.noise_cov, partition)
        else:
            betas = [0.0] * partition.k
            flags.append("betas_assumed_zero")
    out = {}
    sets = [list(s) for s in partition.index_sets]

    Xs, ys = seq2seq_arrays(panel)
    windows = np.lib.stride_tricks.sliding_window_view(panel.values[:, :-1], p, axis=1)  # (m, T-p, p)
    targets = panel.values[:, p:]
    radius = float(np.max(np.linalg.norm(windows, axis=2)))
    log_n = linear_seq_covering_log(alpha, cls.lambda_cap, radius, p, T)

    need_local = "local" in candidates or "hybrid" in candidates
    if need_local:
        mean_local, ests = mean_delta_local(panel, cls, loss_spec, spec, budget, seed)
        local_term = (mean_local, "exact" if all(e.exact for e in ests) else "optimizer lower bound")

    if "seq2seq" in candidates:
        h = _fit(cls, Xs, ys, ridge)
        emp = float(np.mean(loss_spec(h.predict(Xs), ys)))
        rads = [linear_rademacher_bound(cls.lambda_cap, (Xs[s], ys[s]), loss_spec, p).value for s in sets]
        if spec is not None:
            disc = delta_oracle(spec, panel, cls, loss_spec, opt_budget=budget, seed=seed)
        else:
            disc = delta_s_linear_exact(panel, cls.lambda_cap, p, loss_spec, budget, seed) \
                if loss_spec.base == "squared" else delta_s(panel, cls, loss_spec, budget, seed)
        rep = thm1_s2s_bound((max(rads), "closed_form"), disc, partition.sizes, betas, delta)
        out["seq2seq"] = {"member": h, "empirical_risk": emp, "bound": rep,
                          "clip_fraction": _clip_fraction(loss_spec, h.predict(Xs), ys)}

    if "local" in candidates:
        members, emps, clips = [], [], []
        for i in range(m):
            hi = _fit(cls, windows[i], targets[i], ridge)
            members.append(hi)
            pred = hi.predict(windows[i])
            emps.append(float(np.mean(loss_spec(pred, targets[i]))))
            clips.append(_clip_fraction(loss_spec, pred, targets[i]))
        rep = thm3_local_bound(local_term, alpha, T, m, log_n, delta)
        out["local"] = {"member": members, "empirical_risk": float(np.mean(emps)), "bound": rep,
                        "clip_fraction": float(np.mean(clips))}

    if "hybrid" in candidates:
        Xh, yh = windows.reshape(-1, p), targets.reshape(-1)
        h = _fit(cls, Xh, yh, ridge)
        pred = h.predict(Xh)
        emp = float(np.mean(loss_spec(pred, yh)))
        rads = [linear_rademacher_bound(cls.lambda_cap, (windows[s].reshape(-1, p), targets[s].reshape(-1)),
                                        loss_spec, p).value for s in sets]
        mdt, dts = mean_delta_t(spec, panel, cls, loss_spec, budget, seed)
        dt_term = (mdt, "exact" if all(e.exact for e in dts) else "optimizer lower bound")
        b1 = hybrid_b1(dt_term, (max(rads), "closed_form"), partition.sizes, betas, T, delta)
        b2 = hybrid_b2(local_term, alpha, T, m, log_n, delta)
        rep = thm4_hybrid_bound(b1, b2)
        out["hybrid"] = {"member": h, "empirical_risk": emp, "bound": rep,
                         "clip_fraction": _clip_fraction(loss_spec, pred, yh)}

    for v in out.values():
        v["bound"].flags.extend(flags)
        v["total"] = v["empirical_risk"] + v["bound"].value if v["bound"].valid else None
    return out


def verdict(results, candidates=TIE_ORDER):
    """Recommendation with the smallest valid ``empirical risk + bound``; ties follow ``TIE_ORDER``."""
    valid = [(results[c]["total"], TIE_ORDER.index(c), c) for c in candidates
             if c in results and results[c]["total"] is not None]
    if not valid:
        return {"recommendation": "hybrid",
                "tie_break": "all bounds invalid; default per the two-sided hybrid guarantee",
                "flags": ["ALL_BOUNDS_INVALID"]}
    best_total = min(v[0] for v in valid)
    tied = sorted(v for v in valid if abs(v[0] - best_total) <= 1e-12 * max(1.0, abs(best_total)))
    rec = tied[0][2]
    tie = "none" if len(tied) == 1 else "tie broken by order hybrid > seq2seq > local"
    return {"recommendation": rec, "tie_break": tie, "flags": []}


def _evidence(panel, results):
    ev = {"m": panel.m, "T": panel.T, "delta_s": None, "mean_local_disc": None}
    if "seq2seq" in results:
        ev["delta_s"] = results["seq2seq"]["bound"].terms["discrepancy"]["value"]
    for name in ("local", "hybrid"):
        rep = results.get(name, {}).get("bound")
        if rep is not None:
            rep = rep.parts.get("B2", rep)
            ev["mean_local_disc"] = rep.terms["mean_local_discrepancy"]["value"]
    for name, r in results.items():
        ev[name] = {"empirical_risk": r["empirical_risk"], "total": r["total"], "bound": r["bound"].to_dict(),
                    "clip_fraction": r["clip_fraction"]}
    return ev


# regime experiment


def _oracle_heldout(spec, panel, cls, loss_spec, result):
    """Conditional risk of the next value, averaged over series, for each fitted methodology."""
    cond = _conditional(spec, panel, panel.T + 1, cls.p, _tent_next(spec, panel))
    out = {}
    for name, r in result.items():
        if name == "local":
            risks = [oracle_risk(h, cond, loss_spec, rows=[i]) for i, h in enumerate(r["member"])]
            out[name] = float(np.mean(risks))
        else:
            out[name] = oracle_risk(r["member"], cond, loss_spec)
    return out


def _regime_trial(args):
    cfg, m, T, r = args
    seed = _rng.derive_seed(int(cfg["seed"]), _rng.REPETITION, m, T, r)
    spec = _spec(cfg, seed, m=m, T=T)
    panel = simulate(spec)
    cls, loss_spec = _class(cfg), _loss(cfg)
    part = _partition(cfg, m)
    res = methodology_bounds(panel, spec, cls, loss_spec, float(cfg["delta"]), part, cfg["alpha"],
                             float(cfg["ridge"]), budget=_budget(cfg), seed=seed)
    risk = _oracle_heldout(spec, panel, cls, loss_spec, res)
    two = verdict(res, ("seq2seq", "local"))["recommendation"]
    three = verdict(res)["recommendation"]
    risk_two = "seq2seq" if risk["seq2seq"] < risk["local"] else "local"
    risk_three = min(risk, key=lambda k: (risk[k], TIE_ORDER.index(k)))
    row = {"m": m, "T": T, "rep": r, "seed": seed}
    for k in TIE_ORDER:
        row[f"risk_{k}"] = risk[k]
        row[f"emp_{k}"] = res[k]["empirical_risk"]
        row[f"bound_{k}"] = res[k]["bound"].value if res[k]["bound"].valid else None
        row[f"total_{k}"] = res[k]["total"]
        row[f"clip_{k}"] = res[k]["clip_fraction"]
    row.update(risk_winner_two_way=risk_two, advisor_two_way=two, risk_winner=risk_three, advisor=three,
               agree_two_way=two == risk_two)
    return row


def cmd_regime_experiment(cfg):
    jobs = [(cfg, int(m), int(T), r) for m, T in cfg["cells"] for r in range(int(cfg["n_seeds"]))]
    rows = _map(_regime_trial, jobs, cfg.get("workers", 1))
    cells = []
    for m, T in cfg["cells"]:
        sub = [r for r in rows if r["m"] == m and r["T"] == T]
        n = len(sub)
        cells.append({
            "m": m,
            "T": T,
            "n_seeds": n,
            "seq2seq_beats_local": sum(r["risk_seq2seq"] < r["risk_local"] for r in sub) / n,
            "local_beats_seq2seq": sum(r["risk_local"] < r["risk_seq2seq"] for r in sub) / n,
            "advisor_agreement_two_way": sum(r["agree_two_way"] for r in sub) / n,
            "advisor_agreement_three_way": sum(r["advisor"] == r["risk_winner"] for r in sub) / n,
            "advisor_counts": {k: sum(r["advisor"] == k for r in sub) for k in TIE_ORDER},
            "risk_winner_counts": {k: sum(r["risk_winner"] == k for r in sub) for k in TIE_ORDER},
            "mean_risk": {k: float(np.mean([r[f"risk_{k}"] for r in sub])) for k in TIE_ORDER},
            "max_clip_fraction": max(max(r[f"clip_{k}"] for k in TIE_ORDER) for r in sub),
        })
    return _report("regime-experiment", cfg, {"cells": cells, "rows": rows})


# advisor


def cmd_advise(cfg):
    cls, loss_spec = _class(cfg), _loss(cfg)
    if cfg.get("panel"):
        panel, spec = load_panel(cfg["panel"]), None
        if cfg["mode"] == "oracle":
            raise ConfigError("oracle mode needs a process spec, not a panel file")
    else:
        spec = _spec(cfg)
        panel = simulate(spec)
        if cfg["mode"] == "data":
            spec = None
    part = _partition(cfg, panel.m)
    cands = tuple(cfg["candidates"])
    if any(c not in TIE_ORDER for c in cands):
        raise ConfigError(f"candidates must be among {TIE_ORDER}")
    res = methodology_bounds(panel, spec, cls, loss_spec, float(cfg["delta"]), part, cfg["alpha"],
                             float(cfg["ridge"]), cfg.get("betas"), _budget(cfg), int(cfg["seed"]), cands)
    v = verdict(res, cands)
    v["evidence"] = _evidence(panel, res)
    v["mode"] = "oracle" if spec is not None else "data"
    return _report("advise", cfg, v)


# theorem coverage validation


def _validate_trial(args):
    cfg, r = args
    seed = _rng.derive_seed(int(cfg["seed"]), _rng.REPETITION, r)
    spec = _spec(cfg, seed)
    panel = simulate(spec)
    cls, loss_spec, delta = _class(cfg), _loss(cfg), float(cfg["delta"])
    Xs, ys = seq2seq_arrays(panel)
    h = _fit(cls, Xs, ys, float(cfg["ridge"]))
    emp = float(np.mean(loss_spec(h.predict(Xs), ys)))
    true_risk, _ = conditional_risks(spec, panel, h, loss_spec, cls.p)
    gap = true_risk - emp
    disc = delta_oracle(spec, panel, cls, loss_spec, opt_budget=_budget(cfg), seed=seed)
    theorem = cfg["theorem"]
    mass = None
    if theorem == "thm2_independent":
        rad = linear_rademacher_bound(cls.lambda_cap, (Xs, ys), loss_spec, cls.p)
        rep = thm2_independent_bound(rad, disc, panel.m, delta)
    elif theorem == "thm1_s2s":
        part = _partition(cfg, panel.m)
        betas = collection_beta(spec.noise_cov, part)
        rads = [linear_rademacher_bound(cls.lambda_cap, (Xs[list(s)], ys[list(s)]), loss_spec, cls.p).value
                for s in part.index_sets]
        rep = thm1_s2s_bound((max(rads), "closed_form"), disc, part.sizes, betas,
                             float(cfg.get("delta_conf", delta)))
        mass = rep.terms["beta_mass"]["value"]
    else:
        raise ConfigError(f"validate-bound supports thm1_s2s and thm2_independent, not {theorem!r}")
    return {
        "rep": r,
        "seed": seed,
        "gap": gap,
        "bound": rep.value if rep.valid else None,
        "valid": rep.valid,
        "covered": bool(rep.valid and gap <= rep.value),
        "empirical_risk": emp,
        "oracle_risk": true_risk,
        "discrepancy": disc.value,
        "discrepancy_exact": disc.exact,
        "beta_mass": mass,
        "clip_fraction": _clip_fraction(loss_spec, h.predict(Xs), ys),
        "invalid_reason": rep.invalid_reason,
    }


def cmd_validate_bound(cfg):
    reps = int(cfg["n_repetitions"])
    rows = _map(_validate_trial, [(cfg, r) for r in range(reps)], cfg.get("workers", 1))
    valid = [r for r in rows if r["valid"]]
    coverage = sum(r["covered"] for r in valid) / len(valid) if valid else None
    result = {
        "theorem": cfg["theorem"],
        "coverage": coverage,
        "n_valid": len(valid),
        "n_invalid": reps - len(valid),
        "target": 1 - float(cfg["delta"]),
        "mean_gap": float(np.mean([r["gap"] for r in rows])),
        "mean_bound": float(np.mean([r["bound"] for r in valid])) if valid else None,
        "max_clip_fraction": max(r["clip_fraction"] for r in rows),
        "beta_mass": rows[0]["beta_mass"],
        "rows": rows,
    }
    return _report("validate-bound", cfg, result)


# independence-surrogate check


def yu_check(joint, f):
    """Exact ``|E_prod f - E_joint f|`` against ``(n - 1) * TV(joint, prod)``.

    ``joint`` maps state tuples of ``n`` coordinates to probabilities and
    ``f`` maps the same tuples to values in ``[0, 1]``; Fractions give exact
    arithmetic.
    """
    joint = {tuple(k): Fraction(v) for k, v in joint.items()}
    total = sum(joint.values())
    if total != 1:
        raise ValueError("joint probabilities must sum to 1")
    n = len(next(iter(joint)))
    supports = [sorted({k[c] for k in joint}) for c in range(n)]
    marg = [{s: Fraction(0) for s in sup} for sup in supports]
    for k, pr in joint.items():
        for c in range(n):
            marg[c][k[c]] += pr
    states = list(product(*supports))
    prod = {}
    for s in states:
        q = Fraction(1)
        for c in range(n):
            q *= marg[c][s[c]]
        prod[s] = q
    fv = {s: Fraction(f.get(s, 0)) for s in states}
    if any(not 0 <= v <= 1 for v in fv.values()):
        raise ValueError("f must take values in [0, 1]")
    e_joint = sum(joint.get(s, Fraction(0)) * fv[s] for s in states)
    e_prod = sum(prod[s] * fv[s] for s in states)
    tv = sum(abs(joint.get(s, Fraction(0)) - prod[s]) for s in states) / 2
    lhs, rhs = abs(e_prod - e_joint), (n - 1) * tv
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs}


def _random_joint(rng, k, wmax):
    weights = rng.integers(0, wmax + 1, size=(k, k))
    if weights.sum() == 0:
        weights[0, 0] = 1
    tot = int(weights.sum())
    joint = {(a, b): Fraction(int(weights[a, b]), tot) for a in range(k) for b in range(k)}
    fvals = rng.integers(0, 101, size=(k, k))
    f = {(a, b): Fraction(int(fvals[a, b]), 100) for a in range(k) for b in range(k)}
    return joint, f


def cmd_yu_check(cfg):
    rows = []
    if cfg.get("joint") is not None:
        joint = {tuple(e["state"]): Fraction(str(e["p"])) for e in cfg["joint"]}
        f = {tuple(e["state"]): Fraction(str(e["f"])) for e in cfg["f"]}
        res = yu_check(joint, f)
        rows.append({"case": 0, "lhs": str(res["lhs"]), "rhs": str(res["rhs"]), "holds": res["holds"],
                     "lhs_float": float(res["lhs"]), "rhs_float": float(res["rhs"])})
    for r in range(int(cfg["n_random"])):
        rng = _rng.stream(int(cfg["seed"]), _rng.REPETITION, r)
        joint, f = _random_joint(rng, int(cfg["n_states"]), int(cfg["weight_max"]))
        res = yu_check(joint, f)
        rows.append({"case": len(rows), "lhs": str(res["lhs"]), "rhs": str(res["rhs"]), "holds": res["holds"],
                     "lhs_float": float(res["lhs"]), "rhs_float": float(res["rhs"])})
    return _report("yu-check", cfg, {"all_hold": all(r["holds"] for r in rows), "n_cases": len(rows),
                                      "rows": rows})


# tent counterexample


def offset_local_grid(panel, spec, loss_spec, grid_step=0.001):
    """Brute-force local discrepancy of every series for the offset class over a grid of ``c``."""
    grid = np.arange(0.0, 1.0 + grid_step / 2, grid_step)
    nxt = _tent_next(spec, panel)
    out = []
    for i in range(panel.m):
        sub = TimeSeriesPanel(panel.values[i : i + 1], phase=[panel.phase[i]])
        horizon = _conditional(spec, sub, panel.T + 1, 1, nxt[i : i + 1])
        past = [_conditional(spec, sub, t, 1) for t in range(2, panel.T + 1)]
        def risk(c, cond):
            return expected_loss(loss_spec, cond.X[:, -1][None, :] + c[:, None], cond.mean[None, :],
                                 cond.sd[None, :]).mean(axis=1)
        diff = risk(grid, horizon) - np.mean([risk(grid, c) for c in past], axis=0)
        out.append(max(float(diff.max()), 0.0))
    return out


def cmd_tent_example(cfg):
    m, T, seed = int(cfg["m"]), int(cfg["T"]), int(cfg["seed"])
    loss_spec = _loss(cfg)
    budget = _budget(cfg)
    offset, linear = OffsetClass(), LinearClass(int(cfg["p"]), float(cfg["lambda_cap"]))
    table = []
    for setup, mode in (("two_point", "two_point"), ("drift", "drift_half_period")):
        spec = TentSpec(m=m, T=T, phase_mode=mode, seed=seed)
        panel = simulate_tent_panel(spec)
        de_off = delta_e_mc(spec, offset, loss_spec, int(cfg["n_trials"]), budget, seed)
        de_lin = delta_e_mc(spec, linear, loss_spec, int(cfg["n_trials"]), budget, seed)
        loc_opt, _ = mean_delta_local(panel, offset, loss_spec, spec, budget, seed)
        loc_grid = float(np.mean(offset_local_grid(panel, spec, loss_spec, float(cfg["grid_step"]))))
        table.append({
            "setup": setup,
            "delta_e_offset": de_off.value,
            "delta_e_offset_stderr": de_off.stderr,
            "delta_e_linear": de_lin.value,
            "delta_e_linear_stderr": de_lin.stderr,
            "mean_delta_local_offset": loc_opt,
            "mean_delta_local_offset_grid": loc_grid,
        })
    two, drift = table
    summary = {
        "two_point_s2s_negligible": two["delta_e_offset"] <= 0.02,
        "two_point_local_bounded_away": two["mean_delta_local_offset_grid"] >= 0.05,
        "drift_local_negligible": drift["mean_delta_local_offset_grid"] <= 0.02,
        "drift_s2s_bounded_away": drift["delta_e_linear"] >= 0.05,
    }
    return _report("tent-example", cfg, {"rows": table, "summary": summary})


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate-discrepancy": cmd_estimate_discrepancy,
    "estimate-mixing": cmd_estimate_mixing,
    "estimate-complexity": cmd_estimate_complexity,
    "evaluate-bounds": cmd_evaluate_bounds,
    "validate-bound": cmd_validate_bound,
    "regime-experiment": cmd_regime_experiment,
    "advise": cmd_advise,
    "yu-check": cmd_yu_check,
    "tent-example": cmd_tent_example,
}


def run(command, config=None):
    cfg = resolve_config(command, config or {})
    return COMMANDS[command](cfg)


def has_invalid_bound(report) -> bool:
    """True if any bound in the report failed its preconditions."""
    found = False

    def walk(x):
        nonlocal found
        if isinstance(x, dict):
            if "theorem" in x and x.get("valid") is False:
                found = True
            if x.get("valid") is False and "gap" in x:
                found = True
            for v in x.values():
                walk(v)
        elif isinstance(x, list):
            for v in x:
                walk(v)

    walk(report.get("result"))
    return found
