"""Small dense solvers that work for Fraction (object) and float arrays alike."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.linalg


class SingularSystemError(np.linalg.LinAlgError):
    pass


def _is_object(a) -> bool:
    return isinstance(a, np.ndarray) and a.dtype == object


def solve(A, b):
    """Solve ``A x = b``; exact Gaussian elimination when ``A`` and ``b`` hold Fractions."""
    if _is_object(A) or _is_object(b):
        return _solve_exact(np.asarray(A, dtype=object), np.asarray(b, dtype=object))
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    try:
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    except ValueError as exc:
        raise SingularSystemError(str(exc)) from exc
    if np.min(np.abs(np.diag(lu))) <= 1e-14 * max(1.0, np.max(np.abs(A))):
        raise SingularSystemError("matrix is numerically singular")
    return scipy.linalg.lu_solve((lu, piv), b)


def _solve_exact(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    vec = b.ndim == 1
    M = np.empty((n, n + (1 if vec else b.shape[1])), dtype=object)
    M[:, :n] = [[Fraction(v) for v in row] for row in A]
    rhs = b.reshape(n, -1)
    M[:, n:] = [[Fraction(v) for v in row] for row in rhs]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r, c] != 0), None)
        if piv is None:
            raise SingularSystemError(f"exact system singular at column {c}")
        if piv != c:
            M[[c, piv]] = M[[piv, c]]
        p = M[c, c]
        M[c, c:] = M[c, c:] / p
        for r in range(n):
            if r != c and M[r, c] != 0:
                M[r, c:] = M[r, c:] - M[r, c] * M[c, c:]
    x = M[:, n:]
    return x[:, 0] if vec else x


def normalized_null_vector(T, weights=None):
    """Vector ``g`` with ``T g = g`` and ``sum(weights*g) = 1``.

    One equation of ``(T - I) g = 0`` is replaced by the normalization; the
    choice is made so the replaced row is linearly dependent on the others,
    which holds exactly when 1 is a simple eigenvalue.
    """
    exact = _is_object(T)
    n = T.shape[0]
    one = Fraction(1) if exact else 1.0
    A = T - np.eye(n, dtype=object if exact else float) * one
    w = np.full(n, one, dtype=object if exact else float) if weights is None else weights
    last_err = None
    for drop in range(n - 1, -1, -1):
        B = A.copy()
        B[drop, :] = w
        rhs = np.zeros(n, dtype=object if exact else float)
        if exact:
            rhs[:] = Fraction(0)
        rhs[drop] = one
        try:
            g = solve(B, rhs)
        except SingularSystemError as exc:
            last_err = exc
            continue
        if exact:
            if all(v == 0 for v in A.dot(g)):
                return g
        elif np.max(np.abs(A.dot(g))) <= 1e-9 * max(1.0, np.max(np.abs(g))):
            return g
    raise SingularSystemError(f"eigenvalue 1 is not simple or absent: {last_err}")
