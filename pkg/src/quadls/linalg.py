"""Small dense solvers: pivoted Gaussian elimination, normal-equation least squares."""

import numpy as np

# relative pivot tolerance: a pivot below this times max|A| counts as zero
PIVOT_RTOL = 1e-12


class SingularMatrixError(ValueError):
    """Square system has no pivot above the singularity threshold."""


class RankDeficientError(ValueError):
    """Least-squares system does not determine all coefficients."""


def _check_matrix(a, name="a"):
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"{name} must be a nonempty 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must have finite entries")
    return a


def solve_square(a, b):
    """Solve the n-by-n system a @ x = b by Gaussian elimination with partial pivoting.

    Raises SingularMatrixError when the best available pivot falls below
    PIVOT_RTOL times the largest absolute entry of the original matrix.
    """
    a = _check_matrix(a)
    b = np.array(b, dtype=np.float64)
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if b.shape != (n,):
        raise ValueError(f"right-hand side must have shape ({n},), got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side must have finite entries")

    tol = PIVOT_RTOL * np.max(np.abs(a))
    for col in range(n):
        p = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[p, col]) <= tol:
            raise SingularMatrixError(f"pivot {a[p, col]!r} in column {col} below {tol!r}")
        if p != col:
            a[[col, p]] = a[[p, col]]
            b[[col, p]] = b[[p, col]]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= np.outer(factors, a[col, col:])
        b[col + 1:] -= factors * b[col]

    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1:] @ x[i + 1:]) / a[i, i]
    return x


def solve_least_squares(a, b):
    """Least-squares solution of an overdetermined a @ x = b via normal equations.

    Requires full column rank; raises RankDeficientError otherwise.
    """
    a = _check_matrix(a)
    m, n = a.shape
    if m < n:
        raise ValueError(f"system must have at least as many rows as columns, got {a.shape}")
    b = np.array(b, dtype=np.float64)
    if b.shape != (m,):
        raise ValueError(f"right-hand side must have shape ({m},), got {b.shape}")
    try:
        return solve_square(a.T @ a, a.T @ b)
    except SingularMatrixError as err:
        raise RankDeficientError(f"normal equations singular: {err}") from err


def column_rank(a):
    """Number of linearly independent columns, judged by the pivot threshold."""
    a = _check_matrix(a)
    m, n = a.shape
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return 0
    tol = PIVOT_RTOL * scale
    rank = 0
    row = 0
    for col in range(n):
        if row == m:
            break
        p = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[p, col]) <= tol:
            continue
        if p != row:
            a[[row, p]] = a[[p, row]]
        factors = a[row + 1:, col] / a[row, col]
        a[row + 1:, col:] -= np.outer(factors, a[row, col:])
        rank += 1
        row += 1
    return rank
