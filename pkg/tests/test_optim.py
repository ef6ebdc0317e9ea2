import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqbounds._optim import OptBudget, max_quadratic_on_ball, maximize
from seqbounds.hypotheses import LinearClass, project_ball


def _brute_quadratic(Q, g, c, r, n=200_000, seed=0):
    """Dense sampling of the ball plus its boundary, as an independent lower bound on the max."""
    rng = np.random.default_rng(seed)
    d = len(g)
    u = rng.normal(size=(n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = np.concatenate([u * r, u * r * rng.uniform(size=(n, 1)) ** (1 / d)])
    vals = np.einsum("ni,ij,nj->n", v, Q, v) + v @ g + c
    return vals.max()


def test_quadratic_examples():
    # pure quadratic: value is radius^2 times the top eigenvalue
    val, v = max_quadratic_on_ball(np.diag([3.0, -1.0]), np.zeros(2), 0.0, 2.0)
    assert val == pytest.approx(12.0)
    assert np.linalg.norm(v) == pytest.approx(2.0)
    # concave with an interior maximizer
    val, v = max_quadratic_on_ball(-np.eye(2), np.array([0.2, 0.0]), 1.0, 1.0)
    np.testing.assert_allclose(v, [0.1, 0.0])
    assert val == pytest.approx(1.01)
    # linear only
    val, v = max_quadratic_on_ball(np.zeros((2, 2)), np.array([3.0, 4.0]), 0.0, 1.0)
    assert val == pytest.approx(5.0)
    assert max_quadratic_on_ball(np.eye(2), np.ones(2), 0.7, 0.0)[0] == 0.7


def test_quadratic_hard_case():
    # linear term orthogonal to the top eigenvector
    Q = np.diag([1.0, 0.0])
    g = np.array([0.0, 0.5])
    val, v = max_quadratic_on_ball(Q, g, 0.0, 1.0)
    assert val == pytest.approx(_brute_quadratic(Q, g, 0.0, 1.0), abs=1e-4)
    assert val >= _brute_quadratic(Q, g, 0.0, 1.0) - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.floats(0.1, 3.0))
def test_quadratic_matches_sampling(seed, d, r):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d))
    Q, g, c = (A + A.T) / 2, rng.normal(size=d), float(rng.normal())
    val, v = max_quadratic_on_ball(Q, g, c, r)
    assert np.linalg.norm(v) <= r * (1 + 1e-9)
    assert val == pytest.approx(float(v @ Q @ v + g @ v + c), abs=1e-9)
    brute = _brute_quadratic(Q, g, c, r, n=20_000, seed=seed)
    assert val >= brute - 1e-9 * max(1, abs(brute))


def test_maximize_finds_linear_max_on_ball():
    cls = LinearClass(3, 2.0)
    target = np.array([1.0, -2.0, 2.0])

    def f(thetas):
        return thetas @ target

    res = maximize(f, 3, cls.project, cls.sample, OptBudget(restarts=4), seed=1)
    assert res.value == pytest.approx(2.0 * 3.0, rel=1e-6)
    np.testing.assert_allclose(res.theta, 2 * target / 3, atol=1e-3)


def test_maximize_budget_zero_is_random_search_only():
    cls = LinearClass(2, 1.0)
    f = lambda th: -np.sum((th - 0.3) ** 2, axis=1)
    res = maximize(f, 2, cls.project, cls.sample, OptBudget.zero(), seed=0)
    assert res.evaluations == OptBudget().random_samples
    full = maximize(f, 2, cls.project, cls.sample, OptBudget(), seed=0)
    assert full.value >= res.value
    assert full.value == pytest.approx(0.0, abs=1e-8)


def test_maximize_starts_are_used():
    cls = LinearClass(1, 1.0)
    f = lambda th: -np.abs(th[:, 0] - 0.123)
    res = maximize(f, 1, cls.project, cls.sample, OptBudget(restarts=0, iterations=0, random_samples=0),
                   starts=[np.array([0.123])])
    assert res.value == 0.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_best_value_monotone_in_budget(seed):
    cls = LinearClass(2, 1.0)
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(5, 2))

    def f(thetas):
        # multimodal bump landscape
        d = thetas[:, None, :] - centers[None]
        return np.exp(-8 * np.sum(d * d, axis=2)).max(axis=1)

    values = [maximize(f, 2, cls.project, cls.sample, OptBudget(restarts=r, random_samples=s), seed).value
              for r, s in [(0, 16), (2, 16), (4, 64), (16, 256)]]
    assert values == sorted(values)


def test_maximize_deterministic():
    cls = LinearClass(2, 1.0)
    f = lambda th: np.sin(3 * th[:, 0]) * np.cos(2 * th[:, 1])
    a = maximize(f, 2, cls.project, cls.sample, OptBudget(restarts=3), seed=5)
    b = maximize(f, 2, cls.project, cls.sample, OptBudget(restarts=3), seed=5)
    assert a.value == b.value and np.array_equal(a.theta, b.theta)


def test_projected_iterates_feasible():
    seen = []
    cls = LinearClass(2, 0.5)

    def f(thetas):
        seen.append(np.linalg.norm(thetas, axis=1).max())
        return thetas.sum(axis=1)

    maximize(f, 2, cls.project, lambda r: project_ball(r.normal(size=2), 0.5), OptBudget(restarts=2), seed=0)
    # finite-difference probes may step fd_step outside; accepted iterates never do
    assert max(seen) <= 0.5 + 2e-5
