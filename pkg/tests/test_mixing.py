import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqbounds.mixing import (
    analytic_beta_s2s,
    bar_beta_upper,
    beta_mass,
    beta_upper,
    collection_beta,
    cov_term_oracle,
    numeric_tv_bivariate_gaussian,
    proof_constant_beta,
)
from seqbounds.partitions import hierarchical_partition, singleton_partition, whole_partition
from seqbounds.processes import ARCorrelatedSpec, hierarchical_covariance

# TV(N(0, [[1, s], [s, 1]]), N(0, I)) from adaptive 2-D quadrature (scipy dblquad on [-9, 9]^2,
# abs err < 2e-8), computed independently of the grid integrator and frozen here
TV_ORACLE = {0.05: 0.015948507, 0.1: 0.032069050, 0.2: 0.065377581, 0.29: 0.097309540}


def test_analytic_examples():
    assert analytic_beta_s2s(0.0, 0.3) == 0.0
    assert analytic_beta_s2s(0.1, 0.3) == pytest.approx(0.25)
    assert analytic_beta_s2s(0.05, 0.1) == pytest.approx(0.0757575757, rel=1e-8)
    assert proof_constant_beta(0.1) == pytest.approx(0.25)
    assert proof_constant_beta(0.2) == pytest.approx(2 * 0.2 / 0.6)
    assert beta_upper(0.2, 0.3) == max(analytic_beta_s2s(0.2, 0.3), proof_constant_beta(0.2))
    with pytest.raises(ValueError):
        analytic_beta_s2s(0.1, 0.5)
    with pytest.raises(ValueError):
        analytic_beta_s2s(0.4, 0.3)


@settings(max_examples=80, deadline=None)
@given(st.floats(0, 0.49), st.floats(0, 1), st.floats(0, 1))
def test_analytic_nonnegative_and_monotone(s0, a, b):
    lo, hi = sorted((a * s0, b * s0))
    assert 0 <= analytic_beta_s2s(lo, s0) <= analytic_beta_s2s(hi, s0)
    assert (analytic_beta_s2s(hi, s0) == 0) == (hi == 0)


@pytest.mark.parametrize("sigma", sorted(TV_ORACLE))
def test_numeric_tv_matches_quadrature_oracle(sigma):
    est = numeric_tv_bivariate_gaussian(sigma)
    assert est.value == pytest.approx(TV_ORACLE[sigma], abs=1e-6)
    assert est.tolerance < 1e-4
    assert 0 <= est.value <= 1


def test_numeric_tv_zero_symmetry_and_refinement():
    assert numeric_tv_bivariate_gaussian(0.0).value < 1e-6
    a, b = numeric_tv_bivariate_gaussian(0.2), numeric_tv_bivariate_gaussian(-0.2)
    assert a.value == pytest.approx(b.value, abs=1e-8)
    fine = numeric_tv_bivariate_gaussian(0.2, grid_step=0.0025)
    assert abs(fine.value - a.value) <= a.tolerance + 1e-12
    small = [numeric_tv_bivariate_gaussian(s, grid_step=0.01).value for s in (0.1, 0.01, 0.001)]
    assert small == sorted(small, reverse=True)


def test_collection_beta_examples():
    assert [b.value for b in collection_beta(np.eye(4), whole_partition(4))] == [0.0]
    cov = hierarchical_covariance(2)
    betas = collection_beta(cov, hierarchical_partition(2, 1))
    assert [b.sigma for b in betas] == pytest.approx([0.0625, 0.0625])
    assert betas[0].value == pytest.approx(analytic_beta_s2s(0.0625, 0.0625))
    assert all(b.value == 0 for b in collection_beta(cov, singleton_partition(4)))
    # scaling the covariance does not change correlations
    assert collection_beta(0.01 * cov, hierarchical_partition(2, 1))[0].value == pytest.approx(betas[0].value, rel=1e-12)


def test_collection_beta_inapplicable_flag():
    betas = collection_beta(hierarchical_covariance(1, 2), whole_partition(2))
    assert not betas[0].applicable and math.isnan(betas[0].value)


def test_beta_mass_and_bar_beta():
    part = hierarchical_partition(3, 1)
    assert beta_mass(part, [0.1, 0.2]) == pytest.approx(3 * 0.1 + 3 * 0.2)
    assert bar_beta_upper(0, 0) == 0
    assert bar_beta_upper(0.25, 0.05) == pytest.approx(0.30)
    with pytest.raises(ValueError):
        bar_beta_upper(-0.1, 0.0)


def test_cov_term_vanishes_for_independent_rows():
    spec = ARCorrelatedSpec(m=2, T=6, p=1, weights=[0.5], noise_cov=1.0)
    est = cov_term_oracle(spec, 0, 1, n_histories=2000, seed=1)
    assert est.value < 3 * est.tolerance
    corr = ARCorrelatedSpec(m=2, T=6, p=1, weights=[0.9], noise_cov=[[1, 0.9], [0.9, 1]])
    assert cov_term_oracle(corr, 0, 1, n_histories=2000, seed=1).value > est.value
