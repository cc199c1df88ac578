import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lctl.errors import DimensionMismatch, InvalidArgs, NonFinite
from lctl.model import Hyperparams
from lctl.prox import (
    batch_coefficient_update,
    ista_stacked,
    soft_threshold,
    sparse_code_transform,
    stacked_objective,
)
from oracles import golden_section_prox, lasso_kkt_residual, sign_enumeration_lasso, stacked_value

HP = Hyperparams()
finite = st.floats(-1e6, 1e6, allow_nan=False)
thresholds = st.floats(0, 1e3, allow_nan=False)


@pytest.mark.parametrize("a, t, expected", [
    (0.0, 0.5, 0.0),
    (1.0, 0.3, 0.7),
    (-0.2, 0.3, 0.0),
    (-1.0, 0.0, -1.0),
])
def test_soft_threshold_examples(a, t, expected):
    assert soft_threshold(a, t) == pytest.approx(expected, abs=1e-15)


def test_soft_threshold_errors():
    with pytest.raises(NonFinite):
        soft_threshold(np.nan, 0.1)
    with pytest.raises(InvalidArgs):
        soft_threshold(1.0, -0.1)


def test_soft_threshold_matches_golden_section(rng):
    a = rng.normal(0, 3, 500)
    t = rng.uniform(0, 2, 500)
    ours = np.array([soft_threshold(ai, ti) for ai, ti in zip(a, t)])
    assert np.max(np.abs(ours - golden_section_prox(a, t))) < 1e-9


@given(finite, thresholds)
def test_soft_threshold_is_odd(a, t):
    assert soft_threshold(-a, t) == -soft_threshold(a, t)


@given(finite, finite, thresholds)
def test_soft_threshold_is_nonexpansive(a, b, t):
    assert abs(soft_threshold(a, t) - soft_threshold(b, t)) <= abs(a - b) * (1 + 1e-12) + 1e-9


@given(finite, thresholds)
def test_soft_threshold_shrinks(a, t):
    assert abs(soft_threshold(a, t)) <= abs(a)


def test_sparse_code_transform_example():
    z = sparse_code_transform(np.eye(2), np.array([[1.0], [-0.04]]), 0.05)
    np.testing.assert_allclose(z, [[0.95], [0.0]], atol=1e-15)


def test_sparse_code_transform_zero_threshold(rng):
    T, X = rng.normal(size=(4, 6)), rng.normal(size=(6, 10))
    assert np.array_equal(sparse_code_transform(T, X, 0.0), T @ X)


def test_sparse_code_transform_golden(rng):
    T, X = rng.normal(size=(4, 6)), rng.normal(size=(6, 10))
    Z = sparse_code_transform(T, X, 0.1)
    assert np.max(np.abs(Z - golden_section_prox(T @ X, 0.1))) < 1e-9


def test_sparse_code_transform_dims():
    with pytest.raises(DimensionMismatch):
        sparse_code_transform(np.eye(3), np.ones((2, 4)), 0.1)


def test_ista_reduces_to_prox_when_m_is_zero(rng):
    tx = rng.normal(size=5)
    z, rep = ista_stacked(tx, np.zeros((3, 5)), np.zeros(3), 0.4, HP)
    np.testing.assert_array_equal(z, soft_threshold(tx, 0.2))
    assert rep.converged


def test_ista_one_step_with_unit_step_is_exact(rng):
    tx = rng.normal(size=6)
    z, rep = ista_stacked(tx, np.zeros((2, 6)), np.zeros(2), 0.3, HP.replace(ista_max_iters=1))
    assert rep.iterations_used == 1
    np.testing.assert_array_equal(z, soft_threshold(tx, 0.15))


def test_ista_zero_solution_condition(rng):
    tx, M, q = rng.normal(size=4), rng.normal(size=(3, 4)), rng.normal(size=3)
    A = np.vstack([np.eye(4), M])
    mu = 2.0 * np.max(np.abs(A.T @ np.concatenate([tx, q])))
    z, _ = ista_stacked(tx, M, q, mu, HP)
    assert np.all(z == 0.0)


def test_ista_matches_sign_enumeration(rng):
    for _ in range(20):
        tx, M, q = rng.normal(size=3), rng.normal(size=(2, 3)), rng.normal(size=2)
        mu = rng.uniform(0.05, 2.0)
        z, rep = ista_stacked(tx, M, q, mu, HP)
        _, fbest = sign_enumeration_lasso(tx, M, q, mu)
        assert stacked_value(z, tx, M, q, mu) - fbest < 1e-6
        assert lasso_kkt_residual(z, tx, M, q, mu) <= 1e-4


def test_ista_objective_monotone(rng):
    one = HP.replace(ista_max_iters=1)
    for _ in range(100):
        p, c = rng.integers(2, 7), rng.integers(2, 5)
        tx, M, q = rng.normal(size=p), rng.normal(0, 2, size=(c, p)), rng.normal(size=c)
        mu = rng.uniform(0.01, 1.0)
        z = np.zeros(p)
        prev = stacked_value(z, tx, M, q, mu)
        for _ in range(40):
            z, _ = ista_stacked(tx, M, q, mu, one, z0=z)
            cur = stacked_value(z, tx, M, q, mu)
            assert cur <= prev + 1e-12 * max(1.0, abs(prev))
            prev = cur


def test_ista_report_respects_budget(rng):
    tx, M, q = rng.normal(size=4), rng.normal(0, 5, size=(3, 4)), rng.normal(size=3)
    _, rep = ista_stacked(tx, M, q, 0.1, HP.replace(ista_max_iters=3, ista_tol=1e-15))
    assert rep.iterations_used == 3 and not rep.converged


def test_ista_rejects_non_finite():
    with pytest.raises(NonFinite):
        ista_stacked(np.array([np.inf, 0.0]), np.zeros((2, 2)), np.zeros(2), 0.1, HP)


def _batch_problem(rng, N=12, d=6, p=4, c=3):
    T = rng.normal(size=(p, d))
    X = rng.normal(size=(d, N))
    M = rng.normal(size=(c, p))
    Q = np.eye(c)[:, rng.integers(0, c, N)]
    return T, X, M, Q


def test_batch_single_column_reduces_to_ista(rng):
    T, X, M, Q = _batch_problem(rng, N=1)
    Z = batch_coefficient_update(T, X, M, Q, 0.2, HP)
    z, _ = ista_stacked(T @ X[:, 0], M, Q[:, 0], 0.2, HP)
    np.testing.assert_array_equal(Z[:, 0], z)


def test_batch_permutation_equivariance(rng):
    T, X, M, Q = _batch_problem(rng)
    perm = rng.permutation(X.shape[1])
    Z = batch_coefficient_update(T, X, M, Q, 0.2, HP)
    Zp = batch_coefficient_update(T, X[:, perm], M, Q[:, perm], 0.2, HP)
    np.testing.assert_allclose(Zp, Z[:, perm], rtol=0, atol=1e-13)


def test_batch_kkt(rng):
    T, X, M, Q = _batch_problem(rng, N=30)
    mu = 0.3
    Z = batch_coefficient_update(T, X, M, Q, mu, HP)
    TX = T @ X
    for j in range(X.shape[1]):
        assert lasso_kkt_residual(Z[:, j], TX[:, j], M, Q[:, j], mu) <= 1e-4


def test_batch_warm_start_does_not_change_minimizer(rng):
    T, X, M, Q = _batch_problem(rng)
    cold = batch_coefficient_update(T, X, M, Q, 0.2, HP)
    warm = batch_coefficient_update(T, X, M, Q, 0.2, HP, z0=rng.normal(size=cold.shape))
    np.testing.assert_allclose(warm, cold, atol=1e-6)


def test_stacked_objective_vectorized(rng):
    T, X, M, Q = _batch_problem(rng, N=5)
    Z = rng.normal(size=(4, 5))
    vals = stacked_objective(Z, T @ X, M, Q, 0.2)
    for j in range(5):
        assert vals[j] == pytest.approx(stacked_value(Z[:, j], (T @ X)[:, j], M, Q[:, j], 0.2))
