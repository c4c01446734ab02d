"""Dense linear-algebra helpers: checked products, ridge Cholesky solves,
finite-difference Jacobians."""

import numpy as np

from ..errors import ShapeError, SingularSystemError


def matmul(a, b):
    """Shape-checked float64 matrix product (plain numpy, not tape-recorded)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2):
        raise ShapeError(f"matmul needs vectors or matrices, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    return a @ b


def cholesky_solve(m, v, ridge=0.0):
    """Solve (m + ridge*I) x = v with m symmetric PSD.

    On factorization failure the ridge is escalated x10 up to 3 times
    (from 1e-12 when called with ridge=0) before giving up.
    """
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"cholesky_solve needs a square matrix, got {m.shape}")
    if v.shape != (m.shape[0],):
        raise ShapeError(f"rhs shape {v.shape} does not match matrix {m.shape}")
    if ridge < 0:
        raise ShapeError("ridge must be >= 0")
    n = m.shape[0]
    r = ridge
    for attempt in range(4):
        system = m + r * np.eye(n)
        try:
            np.linalg.cholesky(system)
        except np.linalg.LinAlgError:
            r = (r if r > 0.0 else 1e-12) * 10.0
            continue
        x = np.linalg.solve(system, v)
        if np.all(np.isfinite(x)):
            return x
        r = (r if r > 0.0 else 1e-12) * 10.0
    raise SingularSystemError(
        f"system not positive definite after ridge escalation to {r:g}"
    )


def finite_difference_jacobian(f, x, step=1e-6):
    """Central-difference Jacobian of f: R^n -> R^m at x; shape (m, n)."""
    if step <= 0:
        raise ShapeError("step must be > 0")
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = step
        hi = np.asarray(f(x + e), dtype=np.float64)
        lo = np.asarray(f(x - e), dtype=np.float64)
        cols.append((hi - lo) / (2.0 * step))
    return np.stack(cols, axis=-1)
