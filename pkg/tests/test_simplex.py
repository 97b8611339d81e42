import numpy as np
import pytest
from scipy.optimize import linprog

from gaitlp.simplex import SolverError, phase_one


def test_empty_system_is_feasible():
    assert phase_one(n_vars=3).feasible
    assert phase_one(lb=np.full(2, -np.inf), ub=np.full(2, np.inf)).feasible


def test_contradictory_bounds():
    assert not phase_one(A_ub=[[-1.0]], b_ub=[-1.0], lb=[-np.inf], ub=[0.0]).feasible
    assert not phase_one(A_ub=[[-1.0], [1.0]], b_ub=[-1.0, 0.0]).feasible


def test_constructed_feasible_systems(rng):
    """Constraints generated to hold at a sampled interior point are always feasible."""
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        m_ub, m_eq = int(rng.integers(0, 12)), int(rng.integers(0, min(n, 4) + 1))
        x0 = rng.uniform(-5, 5, n)
        A_ub = rng.normal(size=(m_ub, n))
        b_ub = A_ub @ x0 + rng.uniform(0, 2, m_ub)
        A_eq = rng.normal(size=(m_eq, n))
        b_eq = A_eq @ x0
        lb = x0 - rng.uniform(0, 3, n)
        ub = np.where(rng.random(n) < 0.5, np.inf, x0 + rng.uniform(0, 3, n))
        res = phase_one(A_ub, b_ub, A_eq, b_eq, lb, ub, n_vars=n)
        assert res.feasible
        assert np.all(A_ub @ res.x <= b_ub + 1e-6 * np.maximum(1, np.abs(b_ub)))
        assert np.allclose(A_eq @ res.x, b_eq, atol=1e-6 * max(1.0, np.abs(b_eq).max(initial=1.0)))


def test_agrees_with_highs_on_random_systems(rng):
    for _ in range(400):
        n, m = int(rng.integers(2, 7)), int(rng.integers(1, 14))
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m)
        lb = np.where(rng.random(n) < 0.5, 0.0, -np.inf)
        ref = linprog(np.zeros(n), A_ub=A, b_ub=b, bounds=list(zip(lb, [None] * n)), method="highs")
        assert phase_one(A, b, lb=lb, n_vars=n).feasible == (ref.status == 0)


def test_duplicate_rows_keep_tightest():
    A = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    b = np.array([3.0, 1.0, 2.0, 2.0])
    res = phase_one(A, b, lb=[1.0, 0.0], n_vars=2)
    assert res.feasible and res.x[0] <= 1.0 + 1e-9
    assert not phase_one(A, b, lb=[1.5, 0.0], n_vars=2).feasible


def test_iteration_cap_raises(rng):
    n, m = 6, 30
    x0 = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = A @ x0 + 0.1
    A_eq = rng.normal(size=(3, n))
    with pytest.raises(SolverError):
        phase_one(A, b, A_eq, A_eq @ x0, n_vars=n, max_iter=1)


def test_deterministic():
    rng = np.random.default_rng(3)
    A, b = rng.normal(size=(20, 6)), rng.normal(size=20)
    a, c = phase_one(A, b, n_vars=6), phase_one(A.copy(), b.copy(), n_vars=6)
    assert a.feasible == c.feasible and a.iterations == c.iterations


def test_inconsistent_dimensions():
    with pytest.raises(ValueError):
        phase_one(np.zeros((2, 3)), np.zeros(3))


def test_roundoff_constant_row_does_not_poison_residual():
    # an all-zero row whose rhs is a tiny negative roundoff is satisfied within tolerance
    A = np.array([[0.0, 0.0], [1.0, 1.0]])
    res = phase_one(A, [-3e-16, 1.0], lb=[0.0, 0.0], ub=[1.0, 1.0])
    assert res.feasible and res.max_violation <= 1e-6
