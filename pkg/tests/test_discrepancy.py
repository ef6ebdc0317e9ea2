import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqbounds._optim import OptBudget
from seqbounds.commands import offset_local_grid
from seqbounds.discrepancy import (
    conditional_risks,
    delta_e_mc,
    delta_local,
    delta_oracle,
    delta_s,
    delta_s_linear_exact,
    delta_t,
    mean_delta_local,
    mean_delta_t,
)
from seqbounds.hypotheses import BoundedLoss, LinearClass, LinearMember, OffsetClass
from seqbounds.panel import TimeSeriesPanel
from seqbounds.processes import ARCorrelatedSpec, TentSpec, simulate_ar_panel, simulate_tent_panel

SQ = BoundedLoss("squared", 1.0)
ABS = BoundedLoss("absolute", 1.0)


def _random_panel(seed, m=20, T=8, scale=0.2):
    return TimeSeriesPanel(np.random.default_rng(seed).normal(0, scale, size=(m, T)))


def test_delta_s_zero_cases():
    panel = _random_panel(0)
    assert delta_s(panel, LinearClass(2, 1e-12), SQ).value < 1e-20
    v = panel.values.copy()
    v[:, -1] = v[:, -2]
    v[:, -2] = v[:, -3]
    # trailing windows of length 1 coincide at T and T-1
    flat = TimeSeriesPanel(np.column_stack([v[:, :-2], v[:, -2], v[:, -2]]))
    assert delta_s(flat, LinearClass(1, 1.0), SQ).value == 0.0
    assert delta_s_linear_exact(flat, 1.0, 1).value == 0.0


def test_linear_exact_hand_example():
    panel = TimeSeriesPanel(np.array([[0.0, 0.0, 1.0]]))
    est = delta_s_linear_exact(panel, 1.0, 1, BoundedLoss("squared", 4.0))
    assert est.exact and est.value == pytest.approx(4.0)
    assert est.method == "closed_form_spectral"
    # with the default cap the pair (1, -1) is clipped, so the closed form is void
    clipped = delta_s_linear_exact(panel, 1.0, 1)
    assert "clipping_active" in clipped.flags and not clipped.exact
    assert clipped.value == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.5, 3.0))
def test_linear_exact_scaling_and_permutation(seed, s):
    panel = _random_panel(seed, m=10, T=6, scale=0.1)
    base = delta_s_linear_exact(panel, 1.0, 2)
    scaled = delta_s_linear_exact(TimeSeriesPanel(s * panel.values), 1.0, 2, BoundedLoss("squared", 100.0))
    assert scaled.value == pytest.approx(s**2 * base.value, rel=1e-9, abs=1e-15)
    perm = np.random.default_rng(seed).permutation(10)
    assert delta_s_linear_exact(TimeSeriesPanel(panel.values[perm]), 1.0, 2).value == pytest.approx(
        base.value, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("seed,p", [(0, 2), (1, 3), (2, 5)])
def test_optimizer_matches_exact(seed, p):
    panel = _random_panel(seed, T=8, scale=0.1)
    exact = delta_s_linear_exact(panel, 1.0, p)
    assert exact.exact
    opt = delta_s(panel, LinearClass(p, 1.0), SQ, seed=seed)
    assert opt.value == pytest.approx(exact.value, rel=0.01)
    assert opt.value <= exact.value * (1 + 1e-9)


def test_delta_s_monotone_in_budget():
    panel = _random_panel(3, T=8)
    cls = LinearClass(3, 1.0)
    budgets = [OptBudget.zero(), OptBudget(restarts=1, iterations=5), OptBudget(restarts=2), OptBudget(restarts=8)]
    vals = [delta_s(panel, cls, ABS, b, seed=0).value for b in budgets]
    assert vals == sorted(vals)


def test_estimates_nonnegative_with_stderr_contract():
    spec = ARCorrelatedSpec(m=10, T=8, p=1, weights=[0.5], noise_cov=0.0025, seed=1)
    panel = simulate_ar_panel(spec)
    cls = LinearClass(1, 1.0)
    ests = [delta_s(panel, cls, SQ), delta_oracle(spec, panel, cls, SQ), delta_local(panel, 0, cls, SQ, spec=spec),
            delta_t(spec, panel, cls, SQ, 4), delta_e_mc(spec, cls, SQ, n_trials=200)]
    for e in ests:
        assert e.value >= 0
    mc = delta_oracle(spec, panel, cls, SQ, n_cond_samples=500, method="monte_carlo")
    assert mc.method == "monte_carlo" and mc.stderr is not None
    assert ests[1].stderr is None


def test_iid_zero_weight_spec_gives_zero():
    # zero weights make every conditional the same law; constant rows make every window the same input
    spec = ARCorrelatedSpec(m=8, T=10, p=1, weights=[0.0], noise_cov=0.01, seed=3)
    level = np.random.default_rng(0).normal(0, 0.1, size=(8, 1))
    panel = TimeSeriesPanel(np.repeat(level, 10, axis=1))
    for cls, L in [(LinearClass(2, 1.0), SQ), (LinearClass(3, 1.0), ABS), (OffsetClass(), ABS)]:
        assert delta_oracle(spec, panel, cls, L).value < 1e-9
        assert delta_t(spec, panel, cls, L, 5).value < 1e-9
        assert mean_delta_t(spec, panel, cls, L)[0] < 1e-9
        assert mean_delta_local(panel, cls, L, spec=spec)[0] < 1e-9


def test_oracle_exact_vs_monte_carlo():
    spec = ARCorrelatedSpec(m=30, T=8, p=1, weights=[0.8], noise_cov=0.0025, seed=5)
    panel = simulate_ar_panel(spec)
    cls = LinearClass(1, 1.0)
    exact = delta_oracle(spec, panel, cls, SQ)
    assert exact.exact
    mc = delta_oracle(spec, panel, cls, SQ, n_cond_samples=4000, method="monte_carlo", seed=2)
    assert abs(mc.value - exact.value) <= 3 * mc.stderr + 1e-4


def test_conditional_risks_closed_form():
    spec = ARCorrelatedSpec(m=3, T=5, p=1, weights=[0.5], noise_cov=0.01, seed=0)
    panel = simulate_ar_panel(spec)
    h = LinearMember(np.array([0.2]))
    Ly, Ly2 = conditional_risks(spec, panel, h, SQ, 1)
    v = panel.values
    assert Ly == pytest.approx(np.mean((0.2 * v[:, -1] - 0.5 * v[:, -1]) ** 2 + 0.01))
    assert Ly2 == pytest.approx(np.mean((0.2 * v[:, -2] - 0.5 * v[:, -2]) ** 2 + 0.01))


def test_tent_local_discrepancy():
    two = TentSpec(m=6, T=8, phase_mode="two_point", seed=1)
    panel = simulate_tent_panel(two)
    grid = offset_local_grid(panel, two, ABS, 0.001)
    est = mean_delta_local(panel, OffsetClass(), ABS, spec=two)[0]
    assert est >= np.mean(grid) - 1e-9
    assert np.mean(grid) > 0.05
    drift = TentSpec(m=6, T=8, phase_mode="drift_half_period", seed=1)
    dpanel = simulate_tent_panel(drift)
    assert mean_delta_local(dpanel, OffsetClass(), ABS, spec=drift)[0] < 1e-6
    assert max(offset_local_grid(dpanel, drift, ABS, 0.001)) < 1e-9


def test_delta_e_null_cases():
    ar = ARCorrelatedSpec(m=20, T=8, p=1, weights=[0.5], noise_cov=0.0025, seed=0)
    est = delta_e_mc(ar, LinearClass(2, 1.0), SQ, n_trials=500)
    assert est.value <= 3 * est.stderr + 0.02
    tent = TentSpec(m=20, T=8, phase_mode="uniform_over_period")
    est = delta_e_mc(tent, OffsetClass(), ABS, n_trials=500)
    assert est.value <= 3 * est.stderr + 0.02


def test_data_mode_proxies():
    panel = _random_panel(4, m=5, T=10)
    cls = LinearClass(2, 1.0)
    loc = delta_local(panel, 0, cls, SQ)
    assert "data_proxy" in loc.flags and loc.value >= 0
    dt = delta_t(None, panel, cls, SQ, 5)
    assert "data_proxy" in dt.flags and dt.value >= 0
    with pytest.raises(ValueError):
        delta_t(None, panel, cls, SQ, 2)
