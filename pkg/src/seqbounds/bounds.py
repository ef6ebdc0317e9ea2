"""Evaluation of the generalization bounds from ingredient estimates.

Each ingredient may be a plain number, a ``(value, provenance)`` pair or an
estimate object with ``value`` and ``provenance`` attributes.  Reports keep
every term with its provenance so the value can be recomputed from the report
alone (see :func:`recompute`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

@dataclass
class BoundReport:
    theorem: str
    value: float
    terms: dict
    valid: bool = True
    invalid_reason: Optional[str] = None
    delta: Optional[float] = None
    alpha: Optional[float] = None
    flags: list = field(default_factory=list)
    parts: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "theorem": self.theorem,
            "value": self.value if self.valid else None,
            "valid": self.valid,
            "delta": self.delta,
            "terms": self.terms,
            "flags": sorted(set(self.flags)),
        }
        if self.invalid_reason:
            d["invalid_reason"] = self.invalid_reason
        if self.alpha is not None:
            d["alpha"] = self.alpha
        if self.parts:
            d["parts"] = {k: v.to_dict() for k, v in self.parts.items()}
        return d


def _term(x, default="input"):
    if hasattr(x, "value"):
        prov = getattr(x, "provenance", default)
        flags = list(getattr(x, "flags", []))
        return float(x.value), prov, flags
    if isinstance(x, tuple):
        return float(x[0]), str(x[1]), []
    return float(x), default, []


def _collect(**named):
    terms, flags = {}, []
    for name, raw in named.items():
        v, prov, fl = _term(raw)
        terms[name] = {"value": v, "provenance": prov}
        flags += fl
        if prov == "optimizer lower bound":
            flags.append("optimizer_lower_bound")
        if prov == "SURROGATE":
            flags.append("surrogate_covering")
    return terms, flags


def _invalid(theorem, terms, flags, reason, delta, alpha=None):
    return BoundReport(theorem, float("nan"), terms, False, reason, delta, alpha, flags)


def _check_common(loss_cap, delta_conf):
    if loss_cap != 1:
        return "loss bound M must equal 1"
    if not 0 < delta_conf <= 1:
        return "delta must lie in (0, 1]"
    return None


def _beta_mass(sizes, betas):
    return sum((s - 1) * b for s, b in zip(sizes, betas))


def thm1_s2s_bound(max_rademacher, delta_disc, partition_sizes: Sequence[int], betas_per_collection,
                   delta_conf: float, loss_cap: float = 1.0) -> BoundReport:
    """``max_j R_j + Delta + sqrt(log(k / (delta - sum_j (|I_j|-1) beta_j)) / (2 min_j |I_j|))``."""
    sizes = [int(s) for s in partition_sizes]
    betas = [_term(b)[0] for b in betas_per_collection]
    if len(sizes) != len(betas):
        raise ValueError("one beta per collection is required")
    k, c = len(sizes), min(sizes)
    terms, flags = _collect(max_rademacher=max_rademacher, discrepancy=delta_disc)
    mass = _beta_mass(sizes, betas)
    terms.update(k={"value": k, "provenance": "partition"}, min_size={"value": c, "provenance": "partition"},
                 beta_mass={"value": mass, "provenance": "mixing"})
    reason = _check_common(loss_cap, delta_conf)
    if reason is None and any(math.isnan(b) for b in betas):
        reason = "beta formula inapplicable (in-collection correlation >= 0.5)"
    if reason is None and not delta_conf > mass:
        reason = "delta below beta mass"
    if reason:
        return _invalid("thm1_s2s", terms, flags, reason, delta_conf)
    conf = math.sqrt(math.log(k / (delta_conf - mass)) / (2 * c))
    terms["confidence"] = {"value": conf, "provenance": "formula"}
    value = terms["max_rademacher"]["value"] + terms["discrepancy"]["value"] + conf
    return BoundReport("thm1_s2s", value, terms, True, None, delta_conf, None, flags)


def thm2_independent_bound(rademacher, delta_disc, m: int, delta_conf: float, loss_cap: float = 1.0) -> BoundReport:
    """``2 R + Delta + sqrt(log(1/delta) / m)``."""
    terms, flags = _collect(rademacher=rademacher, discrepancy=delta_disc)
    terms["m"] = {"value": int(m), "provenance": "data"}
    reason = _check_common(loss_cap, delta_conf)
    if reason is None and m < 1:
        reason = "m must be >= 1"
    if reason:
        return _invalid("thm2_independent", terms, flags, reason, delta_conf)
    conf = math.sqrt(math.log(1 / delta_conf) / m)
    terms["confidence"] = {"value": conf, "provenance": "formula"}
    value = 2 * terms["rademacher"]["value"] + terms["discrepancy"]["value"] + conf
    return BoundReport("thm2_independent", value, terms, True, None, delta_conf, None, flags)


def thm3_local_bound(mean_local_disc, alpha: float, T: int, m: int, max_log_covering, delta_conf: float,
                     loss_cap: float = 1.0) -> BoundReport:
    """``mean Delta(Z_i) + 2 alpha + sqrt((2/T) log(m N / delta))`` with ``log N`` supplied."""
    terms, flags = _collect(mean_local_discrepancy=mean_local_disc, log_covering=max_log_covering)
    terms.update(T={"value": int(T), "provenance": "data"}, m={"value": int(m), "provenance": "data"})
    reason = _check_common(loss_cap, delta_conf)
    if reason is None and not alpha > 0:
        reason = "alpha must be positive"
    if reason is None and T < 1:
        reason = "T must be >= 1"
    if reason:
        return _invalid("thm3_local", terms, flags, reason, delta_conf, alpha)
    log_n = terms["log_covering"]["value"]
    conf = math.sqrt((2 / T) * (math.log(m) + log_n - math.log(delta_conf)))
    terms["confidence"] = {"value": conf, "provenance": "formula"}
    value = terms["mean_local_discrepancy"]["value"] + 2 * alpha + conf
    return BoundReport("thm3_local", value, terms, True, None, delta_conf, alpha, flags)


def thm3_alpha_sweep(mean_local_disc, alphas, T, m, log_covering_fn, delta_conf, loss_cap=1.0) -> BoundReport:
    """The Thm-3 report at the grid value of ``alpha`` that minimizes it."""
    best = None
    for a in alphas:
        rep = thm3_local_bound(mean_local_disc, a, T, m, log_covering_fn(a), delta_conf, loss_cap)
        if rep.valid and (best is None or rep.value < best.value):
            best = rep
    if best is None:
        raise ValueError("no valid alpha on the grid")
    best.terms["alpha_grid"] = {"value": [float(a) for a in alphas], "provenance": "sweep"}
    return best


def hybrid_b1(mean_delta_t, max_rademacher, partition_sizes, betas_per_collection, T: int, delta_conf: float,
              loss_cap: float = 1.0) -> BoundReport:
    """``mean_t Delta_t + max_j R_j + sqrt(log(2 T k / (delta - 2 beta_mass)) / (2 min_j |I_j|))``."""
    sizes = [int(s) for s in partition_sizes]
    betas = [_term(b)[0] for b in betas_per_collection]
    k, c = len(sizes), min(sizes)
    terms, flags = _collect(mean_delta_t=mean_delta_t, max_rademacher=max_rademacher)
    mass = _beta_mass(sizes, betas)
    terms.update(k={"value": k, "provenance": "partition"}, min_size={"value": c, "provenance": "partition"},
                 beta_mass={"value": mass, "provenance": "mixing"}, T={"value": int(T), "provenance": "data"})
    reason = _check_common(loss_cap, delta_conf)
    if reason is None and any(math.isnan(b) for b in betas):
        reason = "beta formula inapplicable (in-collection correlation >= 0.5)"
    if reason is None and not delta_conf > 2 * mass:
        reason = "delta below twice the beta mass"
    if reason:
        return _invalid("hybrid_b1", terms, flags, reason, delta_conf)
    conf = math.sqrt(math.log(2 * T * k / (delta_conf - 2 * mass)) / (2 * c))
    terms["confidence"] = {"value": conf, "provenance": "formula"}
    value = terms["mean_delta_t"]["value"] + terms["max_rademacher"]["value"] + conf
    return BoundReport("hybrid_b1", value, terms, True, None, delta_conf, None, flags)


def hybrid_b2(mean_local_disc, alpha, T, m, max_log_covering, delta_conf, loss_cap=1.0) -> BoundReport:
    """``mean Delta(Z_i) + 2 alpha + sqrt((2/T) log(2 m N / delta))``."""
    terms, flags = _collect(mean_local_discrepancy=mean_local_disc, log_covering=max_log_covering)
    terms.update(T={"value": int(T), "provenance": "data"}, m={"value": int(m), "provenance": "data"})
    reason = _check_common(loss_cap, delta_conf)
    if reason is None and not alpha > 0:
        reason = "alpha must be positive"
    if reason:
        return _invalid("hybrid_b2", terms, flags, reason, delta_conf, alpha)
    log_n = terms["log_covering"]["value"]
    conf = math.sqrt((2 / T) * (math.log(2 * m) + log_n - math.log(delta_conf)))
    terms["confidence"] = {"value": conf, "provenance": "formula"}
    value = terms["mean_local_discrepancy"]["value"] + 2 * alpha + conf
    return BoundReport("hybrid_b2", value, terms, True, None, delta_conf, alpha, flags)


def thm4_hybrid_bound(b1_ingredients, b2_ingredients) -> BoundReport:
    """``min(B1, B2)`` over the valid parts.

    Ingredients are either ready :class:`BoundReport` objects or keyword
    dictionaries for :func:`hybrid_b1` / :func:`hybrid_b2`.
    """
    b1 = b1_ingredients if isinstance(b1_ingredients, BoundReport) else hybrid_b1(**b1_ingredients)
    b2 = b2_ingredients if isinstance(b2_ingredients, BoundReport) else hybrid_b2(**b2_ingredients)
    valid = [r for r in (b1, b2) if r.valid]
    terms = {
        "B1": {"value": b1.value if b1.valid else None, "provenance": "hybrid_b1"},
        "B2": {"value": b2.value if b2.valid else None, "provenance": "hybrid_b2"},
    }
    flags = b1.flags + b2.flags
    delta = b1.delta if b1.delta is not None else b2.delta
    if not valid:
        rep = _invalid("thm4_hybrid", terms, flags, "both B1 and B2 invalid", delta, b2.alpha)
    else:
        best = min(valid, key=lambda r: r.value)
        rep = BoundReport("thm4_hybrid", best.value, terms, True, None, delta, b2.alpha, flags)
        rep.terms["active"] = {"value": "B1" if best is b1 else "B2", "provenance": "min"}
    rep.parts = {"B1": b1, "B2": b2}
    return rep


def prop2_delta_s_bound(delta_e, max_rademacher_pair, c: int, k: int, bar_beta_mass: float, delta_conf: float,
                        loss_cap: float = 1.0) -> BoundReport:
    """``Delta_e + R + sqrt(log(2k / (delta - bar_beta_mass)) / (2c))``."""
    terms, flags = _collect(delta_e=delta_e, max_rademacher=max_rademacher_pair)
    terms.update(c={"value": int(c), "provenance": "partition"}, k={"value": int(k), "provenance": "partition"},
                 bar_beta_mass={"value": float(bar_beta_mass), "provenance": "mixing"})
    reason = _check_common(loss_cap, delta_conf)
    if reason is None and not delta_conf > bar_beta_mass:
        reason = "delta below beta mass"
    if reason:
        return _invalid("prop2_delta_s", terms, flags, reason, delta_conf)
    conf = math.sqrt(math.log(2 * k / (delta_conf - bar_beta_mass)) / (2 * c))
    terms["confidence"] = {"value": conf, "provenance": "formula"}
    value = terms["delta_e"]["value"] + terms["max_rademacher"]["value"] + conf
    return BoundReport("prop2_delta_s", value, terms, True, None, delta_conf, None, flags)


def recompute(report: dict) -> Optional[float]:
    """Recompute a serialized report's value from its terms map alone."""
    t = {k: v["value"] for k, v in report["terms"].items()}
    delta, name = report["delta"], report["theorem"]
    if not report["valid"]:
        return None
    if name == "thm1_s2s":
        return t["max_rademacher"] + t["discrepancy"] + math.sqrt(
            math.log(t["k"] / (delta - t["beta_mass"])) / (2 * t["min_size"]))
    if name == "thm2_independent":
        return 2 * t["rademacher"] + t["discrepancy"] + math.sqrt(math.log(1 / delta) / t["m"])
    if name == "thm3_local":
        return t["mean_local_discrepancy"] + 2 * report["alpha"] + math.sqrt(
            (2 / t["T"]) * (math.log(t["m"]) + t["log_covering"] - math.log(delta)))
    if name == "hybrid_b1":
        return t["mean_delta_t"] + t["max_rademacher"] + math.sqrt(
            math.log(2 * t["T"] * t["k"] / (delta - 2 * t["beta_mass"])) / (2 * t["min_size"]))
    if name == "hybrid_b2":
        return t["mean_local_discrepancy"] + 2 * report["alpha"] + math.sqrt(
            (2 / t["T"]) * (math.log(2 * t["m"]) + t["log_covering"] - math.log(delta)))
    if name == "thm4_hybrid":
        vals = [recompute(p) for p in report["parts"].values()]
        return min(v for v in vals if v is not None)
    if name == "prop2_delta_s":
        return t["delta_e"] + t["max_rademacher"] + math.sqrt(
            math.log(2 * t["k"] / (delta - t["bar_beta_mass"])) / (2 * t["c"]))
    raise ValueError(f"unknown theorem {name!r}")
