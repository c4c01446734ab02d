"""Dense kernels: matmul against a triple loop, the SPD solver against the
2x2 adjugate formula, finite differences against closed-form derivatives,
and seeded stream behavior."""

import numpy as np
import pytest

from splineae.errors import ShapeError, SingularSystemError
from splineae.numerics import cholesky_solve, finite_difference_jacobian, make_rng, matmul


def loop_matmul(A, B):
    A = np.atleast_2d(A)
    B2 = B.reshape(len(B), 1) if B.ndim == 1 else B
    out = np.zeros((A.shape[0], B2.shape[1]))
    for i in range(A.shape[0]):
        for j in range(B2.shape[1]):
            s = 0.0
            for k in range(A.shape[1]):
                s += A[i, k] * B2[k, j]
            out[i, j] = s
    return out


@pytest.mark.parametrize("seed", range(5))
def test_matmul_matches_triple_loop(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 6))
    B = rng.standard_normal((6, 3))
    assert np.abs(matmul(A, B) - loop_matmul(A, B)).max() <= 1e-12


def test_matmul_vector_cases():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((3, 5))
    v = rng.standard_normal(5)
    assert np.abs(matmul(A, v) - loop_matmul(A, v).ravel()).max() <= 1e-12


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def adjugate_solve_2x2(A, v):
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    adj = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]])
    return adj @ v / det


@pytest.mark.parametrize("seed", range(5))
def test_cholesky_solve_matches_adjugate(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((2, 2))
    A = M @ M.T + 0.5 * np.eye(2)
    v = rng.standard_normal(2)
    x = cholesky_solve(A, v, ridge=0.0)
    assert np.abs(x - adjugate_solve_2x2(A, v)).max() <= 1e-10


def test_cholesky_solve_residual_small():
    rng = np.random.default_rng(11)
    M = rng.standard_normal((5, 5))
    A = M @ M.T + np.eye(5)
    v = rng.standard_normal(5)
    x = cholesky_solve(A, v, ridge=0.0)
    assert np.abs(A @ x - v).max() <= 1e-10


def test_cholesky_solve_ridge_escalation_on_singular():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    v = np.array([1.0, 1.0])
    x = cholesky_solve(A, v, ridge=0.0)
    assert np.all(np.isfinite(x))
    # ridge symmetrizes the solution of the rank-1 system
    assert abs(x[0] - x[1]) <= 1e-6


def test_cholesky_solve_gives_up_on_negative_definite():
    A = -np.eye(2)
    with pytest.raises(SingularSystemError):
        cholesky_solve(A, np.ones(2), ridge=1e-12)


def test_cholesky_solve_rejects_nonsquare():
    with pytest.raises(ShapeError):
        cholesky_solve(np.ones((2, 3)), np.ones(2))


def test_finite_difference_jacobian_quadratic():
    def f(x):
        return np.array([x[0] ** 2, x[0] * x[1], np.sin(x[1])])

    x = np.array([0.7, -0.4])
    J = finite_difference_jacobian(f, x)
    expect = np.array([[2 * x[0], 0.0], [x[1], x[0]], [0.0, np.cos(x[1])]])
    assert np.abs(J - expect).max() <= 1e-8


def test_make_rng_reproducible_and_keyed():
    a = make_rng(42).standard_normal(10000)
    b = make_rng(42).standard_normal(10000)
    c = make_rng(42, 1).standard_normal(10000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert isinstance(make_rng(0), np.random.Generator)


def test_make_rng_key_paths_are_distinct():
    draws = {k: tuple(make_rng(7, k).integers(0, 2**31, 8).tolist()) for k in range(6)}
    assert len(set(draws.values())) == 6
