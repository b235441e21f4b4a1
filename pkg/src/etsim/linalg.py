"""Small dense linear-algebra kernels: cyclic Jacobi eigensolver, matrix
exponential, and a dense Lyapunov solver.

Everything here targets desk-scale matrices (a few hundred rows at most).
The Jacobi solver exists as an in-house route for symmetric
eigendecompositions so that spectral quantities of networks can be
cross-checked against LAPACK in tests; the matrix exponential is a
deliberately separate route from the Lyapunov solve so the two can verify
each other.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import NumericalError, SingularSystemError

__all__ = ["jacobi_eigh", "jacobi_eigvalsh", "expm_taylor", "solve_lyapunov"]


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-12,
                max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.

    Sweeps rotate every off-diagonal pair (p, q) in order until the
    off-diagonal Frobenius norm drops below ``tol * max(1, ||A||_F)``.

    Returns:
        (eigenvalues ascending, eigenvectors as columns, paired by index).

    Raises:
        NumericalError: no convergence within ``max_sweeps`` sweeps.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("jacobi_eigh expects a square matrix")
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a[0, :1].copy(), v
    scale = max(1.0, float(np.linalg.norm(a)))
    off_mask = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        # Off-diagonal norm taken directly from the entries; the
        # ||A||^2 - ||diag||^2 form cancels catastrophically near
        # convergence and never reaches the threshold.
        off = float(np.linalg.norm(a[off_mask]))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-30 * scale:
                    continue
                # Stable rotation angle (Golub & Van Loan style).
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    else:
        raise NumericalError(
            f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def jacobi_eigvalsh(matrix: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix via :func:`jacobi_eigh`."""
    w, _ = jacobi_eigh(matrix, tol=tol)
    return w


def expm_taylor(matrix: np.ndarray, order: int = 12) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a Taylor polynomial.

    The argument is scaled by 2**-s until its Frobenius norm is at most 0.5,
    the order-``order`` Taylor series is summed, and the result squared back
    s times. At norm 0.5 the order-12 truncation error is ~1e-13 relative,
    adequate for the quadrature oracle this backs.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expm_taylor expects a square matrix")
    nrm = float(np.linalg.norm(a))
    s = 0
    if nrm > 0.5:
        s = int(math.ceil(math.log2(nrm / 0.5)))
    b = a / (2.0 ** s)
    n = a.shape[0]
    result = np.eye(n)
    term = np.eye(n)
    for k in range(1, order + 1):
        term = term @ b / k
        result = result + term
    for _ in range(s):
        result = result @ result
    return result


def solve_lyapunov(drift: np.ndarray, forcing: np.ndarray) -> np.ndarray:
    """Solve the continuous Lyapunov equation  drift P + P drift^T + forcing = 0.

    Vectorizes into an n^2 x n^2 dense system and eliminates. The result is
    symmetrized. Raises SingularSystemError when the Kronecker system is
    singular (some eigenvalue pair of ``drift`` sums to zero).
    """
    a = np.asarray(drift, dtype=float)
    q = np.asarray(forcing, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or q.shape != (n, n):
        raise ValueError("drift and forcing must be square and same size")
    k = np.kron(np.eye(n), a) + np.kron(a, np.eye(n))
    try:
        vec_p = np.linalg.solve(k, -q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"Lyapunov system is singular: {exc}") from exc
    p = vec_p.reshape((n, n), order="F")
    return 0.5 * (p + p.T)
