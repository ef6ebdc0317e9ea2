import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from seqbounds.processes import (
    ARCorrelatedSpec,
    CovarianceError,
    TentSpec,
    check_psd,
    companion_radius,
    covariance_from_dict,
    factorize,
    geodesic_covariance,
    geodesic_grid,
    hierarchical_covariance,
    simulate_ar_batch,
    simulate_ar_fast,
    simulate_ar_panel,
    simulate_tent_panel,
    spec_from_dict,
    tent_draw,
    tent_next_values,
    tent_value,
)


def test_hierarchical_covariance_values():
    s = hierarchical_covariance(2, 4)
    assert s[0, 1] == pytest.approx(0.25)
    assert s[0, 2] == pytest.approx(0.0625)
    assert s[0, 3] == pytest.approx(0.0625)
    np.testing.assert_array_equal(np.diag(s), 1.0)
    np.testing.assert_allclose(hierarchical_covariance(1, 2), [[1.0, 0.5], [0.5, 1.0]])
    # default decay base is m
    np.testing.assert_allclose(hierarchical_covariance(2), s)
    with pytest.raises(ValueError):
        hierarchical_covariance(0)


@pytest.mark.parametrize("D", [1, 3, 6])
def test_hierarchical_covariance_is_psd(D):
    evals = np.linalg.eigvalsh(hierarchical_covariance(D))
    assert evals[0] >= -1e-12


def test_geodesic_covariance_values():
    x = np.array([0.0, 0.0, 1.0])
    s = geodesic_covariance(np.stack([x, x]), np.e)
    np.testing.assert_allclose(s, 1.0)
    # a 2x2 antipodal pair is PSD since e^-pi < 1
    s = geodesic_covariance(np.stack([x, -x]), np.e)
    assert s[0, 1] == pytest.approx(np.exp(-np.pi), abs=1e-12)
    assert s[0, 1] == pytest.approx(0.0432, abs=1e-4)
    s = geodesic_covariance(np.stack([x, [1.0, 0.0, 0.0]]), np.e)
    assert s[0, 1] == pytest.approx(0.2079, abs=1e-4)
    with pytest.raises(ValueError):
        geodesic_covariance(np.array([[0.0, 0.0, 2.0]]), np.e)


def test_geodesic_grid_sizes():
    assert geodesic_grid(0).shape == (12, 3)
    g = geodesic_grid(1)
    assert g.shape == (42, 3)
    np.testing.assert_allclose(np.linalg.norm(g, axis=1), 1.0)


def test_psd_repair_and_errors(caplog):
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    tiny = np.eye(2) - (1 + 5e-10) * np.outer(u, u)
    with caplog.at_level(logging.WARNING):
        fixed = check_psd(tiny)
    assert "clipped negative eigenvalue" in caplog.text
    assert np.max(np.abs(fixed - tiny)) <= 1e-6
    assert np.linalg.eigvalsh(fixed)[0] >= -1e-15
    with pytest.raises(CovarianceError):
        check_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(CovarianceError):
        check_psd(np.array([[1.0, 0.2], [0.1, 1.0]]))


def test_factorize_near_singular():
    s = hierarchical_covariance(6)
    a = factorize(s)
    np.testing.assert_allclose(a @ a.T, s, atol=1e-12)


def test_zero_process_gives_zero_panel():
    spec = ARCorrelatedSpec(m=3, T=6, p=2, weights=[0.0, 0.0], noise_cov=np.zeros((3, 3)))
    np.testing.assert_array_equal(simulate_ar_panel(spec).values, 0.0)


def test_white_noise_rows_uncorrelated():
    T = 4000
    spec = ARCorrelatedSpec(m=3, T=T, p=1, weights=[0.0], noise_cov=1.0, seed=3)
    y = simulate_ar_panel(spec).values
    c = np.corrcoef(y)
    assert np.max(np.abs(c - np.eye(3))) < 3 / np.sqrt(T)
    assert np.all(np.abs(y.var(axis=1) - 1) < 0.1)


@pytest.mark.parametrize("rho", [0.3, -0.6])
def test_pair_correlation_matches_sigma(rho):
    T = 4000
    spec = ARCorrelatedSpec(m=2, T=T, p=1, weights=[0.0], noise_cov=[[1, rho], [rho, 1]], seed=5)
    y = simulate_ar_panel(spec).values
    assert abs(np.corrcoef(y)[0, 1] - rho) < 3 / np.sqrt(T)


def test_ar1_autocovariance():
    a, T = 0.5, 20000
    spec = ARCorrelatedSpec(m=1, T=T, p=1, weights=[a], noise_cov=1.0, burn_in=200, seed=11)
    y = simulate_ar_panel(spec).values[0]
    gamma0 = 1 / (1 - a**2)
    for k in range(4):
        emp = np.mean((y[k:] - y.mean()) * (y[: T - k] - y.mean()))
        assert emp == pytest.approx(a**k * gamma0, abs=0.08)


def test_weights_are_chronological():
    # y_t = 1.0 * y_{t-2}: oldest-first weights (1, 0)
    spec = ARCorrelatedSpec(m=1, T=6, p=2, weights=[1.0, 0.0], noise_cov=1.0, burn_in=0, seed=2)
    y = simulate_ar_panel(spec).values[0]
    mean = spec.conditional_mean(y[None, :2])
    assert mean[0] == y[0]


def test_mean_hook_replaces_linear_map():
    def halve_last(w):
        return 0.5 * w[..., -1]

    lin = ARCorrelatedSpec(m=2, T=8, p=2, weights=[0.0, 0.5], noise_cov=1.0, seed=4)
    hook = lin.replace(weights=[9.0, 9.0], mean_fn=halve_last)
    np.testing.assert_array_equal(simulate_ar_panel(lin).values, simulate_ar_panel(hook).values)
    assert hook.to_dict()["mean_fn"] == "halve_last"


def test_determinism_and_seed_dependence():
    spec = ARCorrelatedSpec(m=4, T=10, p=2, weights=[0.2, 0.5], noise_cov=0.01, seed=7)
    a, b = simulate_ar_panel(spec), simulate_ar_panel(spec)
    assert a.values.tobytes() == b.values.tobytes()
    assert not np.array_equal(a.values, simulate_ar_panel(spec, seed=8).values)
    batch = simulate_ar_batch(spec, 3)
    assert batch.shape == (3, 4, 10)
    np.testing.assert_array_equal(batch[1], simulate_ar_batch(spec, 2)[1])


def test_per_series_streams_do_not_depend_on_m():
    # with diagonal noise each series owns its stream, so adding series leaves earlier rows intact
    small = ARCorrelatedSpec(m=2, T=5, p=1, weights=[0.3], noise_cov=1.0, seed=1)
    large = small.replace(m=5, weights=[0.3], noise_cov=1.0)
    np.testing.assert_array_equal(simulate_ar_panel(small).values, simulate_ar_panel(large).values[:2])


def test_fast_batch_matches_law():
    spec = ARCorrelatedSpec(m=2, T=3, p=1, weights=[0.5], noise_cov=1.0)
    y = simulate_ar_fast(spec, 20000, np.random.default_rng(0))
    assert y.shape == (20000, 2, 3)
    assert y[:, :, -1].var() == pytest.approx(1 / (1 - 0.25), rel=0.05)


def test_companion_radius_and_stationarity():
    assert companion_radius([0.5]) == pytest.approx(0.5)
    assert companion_radius([0.2, 0.5]) < 1
    assert not ARCorrelatedSpec(m=1, T=3, p=1, weights=[1.2], noise_cov=1.0).is_stationary()


def test_spec_validation():
    with pytest.raises(ValueError):
        ARCorrelatedSpec(m=2, T=5, p=2, weights=[0.1, 0.2, 0.3], noise_cov=1.0)
    with pytest.raises(ValueError):
        ARCorrelatedSpec(m=2, T=5, p=1, weights=[0.1], noise_cov=np.eye(3))
    with pytest.raises(ValueError):
        TentSpec(m=2, T=5)
    with pytest.raises(ValueError):
        TentSpec(m=2, T=4, b_range=(0.0, 2.0))


def test_tent_value_contract():
    assert tent_value(0.7, 5, 10) == pytest.approx(0.7)
    assert tent_value(0.7, 0, 10) == 0.0
    assert tent_value(0.7, 10, 10) == pytest.approx(0.0)
    assert tent_value(0.7, 2.5, 10) == pytest.approx(0.35)
    assert tent_value(0.7, 7.5, 10) == pytest.approx(0.35)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.floats(0, 100), st.sampled_from([2, 4, 8, 10]))
def test_tent_periodic_and_bounded(b, s, T):
    v = tent_value(b, s, T)
    assert tent_value(b, s + T, T) == pytest.approx(v, abs=1e-9)
    assert -1e-12 <= v <= b + 1e-12


def test_tent_panel_rows():
    spec = TentSpec(m=6, T=8, phase_mode="two_point", seed=2)
    panel = simulate_tent_panel(spec)
    b, s = tent_draw(spec)
    assert set(panel.phase) <= {0, 4}
    for i in range(spec.m):
        if panel.phase[i] == 0:
            np.testing.assert_allclose(panel.values[i, :3], 2 * b[0, i] * np.arange(3) / 8)
    zero = simulate_tent_panel(TentSpec(m=3, T=4, b_range=(0.0, 0.0)))
    np.testing.assert_array_equal(zero.values, 0.0)
    assert simulate_tent_panel(spec) == panel


def test_tent_next_values_follow_rows():
    spec = TentSpec(m=5, T=6, phase_mode="uniform_over_period", seed=3)
    b, s = tent_draw(spec)
    nxt = tent_next_values(spec)
    np.testing.assert_allclose(nxt, tent_value(b[0], s[0] + 6, 6))


def test_drift_stays_on_rising_half():
    spec = TentSpec(m=4, T=8, phase_mode="drift_half_period", seed=1)
    panel = simulate_tent_panel(spec)
    assert np.all(np.diff(np.column_stack([panel.values, tent_next_values(spec)]), axis=1) >= 0)


def test_uniform_phase_marginals_are_shift_invariant():
    spec = TentSpec(m=5000, T=8, phase_mode="uniform_over_period", seed=9)
    y = simulate_tent_panel(spec).values
    assert stats.ks_2samp(y[:, 0], y[:, 1]).pvalue > 0.01


def test_spec_serialization_round_trip():
    spec = ARCorrelatedSpec(m=4, T=6, p=2, weights=[0.2, 0.5], noise_cov=hierarchical_covariance(2), seed=5)
    back = spec_from_dict(spec.to_dict())
    np.testing.assert_array_equal(simulate_ar_panel(back).values, simulate_ar_panel(spec).values)
    tent = TentSpec(m=3, T=4, phase_mode="drift_half_period", seed=1)
    assert spec_from_dict(tent.to_dict()) == tent
    cov = covariance_from_dict({"type": "equicorrelated", "rho": 0.2, "scale": 2.0}, 3)
    np.testing.assert_allclose(cov, 2 * (0.8 * np.eye(3) + 0.2))
    np.testing.assert_allclose(covariance_from_dict({"type": "hierarchical"}, 4), hierarchical_covariance(2))
