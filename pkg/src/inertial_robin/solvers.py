"""SPD linear solves: cached sparse factorisation or Jacobi-preconditioned CG."""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverFailure


def _relative_residual(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return r / nb if nb > 0 else r


def conjugate_gradient(A, b, tol=1e-12, x0=None, max_iter=None):
    """Diagonally scaled CG; stops on ``||b - Ax|| <= tol * ||b||``."""
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    dim = len(b)
    max_iter = 20 * dim if max_iter is None else max_iter
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return np.zeros(dim)
    inv_diag = 1.0 / A.diagonal()
    x = np.zeros(dim) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for _ in range(max_iter):
        if np.linalg.norm(r) <= tol * nb:
            return x
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = np.linalg.norm(b - A @ x) / nb
    if res <= tol:
        return x
    raise SolverFailure(f"CG did not converge in {max_iter} iterations", res)


class SPDSolver:
    """Reusable solver for one SPD matrix.

    ``method="direct"`` factorises once with SuperLU and polishes with a
    single step of iterative refinement when the residual bound is missed.
    """

    def __init__(self, A, tol=1e-12, method="direct"):
        self.A = sp.csc_matrix(A)
        self.tol = tol
        self.method = method
        if method == "direct":
            self._lu = spla.splu(self.A, permc_spec="MMD_AT_PLUS_A")
        elif method != "cg":
            raise ValueError(f"unknown solver method {method!r}")

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if self.method == "cg":
            return conjugate_gradient(self.A, b, self.tol)
        if not np.any(b):
            return np.zeros_like(b)
        x = self._lu.solve(b)
        res = _relative_residual(self.A, x, b)
        if res > self.tol:
            x = x + self._lu.solve(b - self.A @ x)
            res = _relative_residual(self.A, x, b)
            if res > self.tol:
                raise SolverFailure("direct solve missed the residual bound", res)
        return x


def solve_spd(A, b, tol=1e-12, method="direct"):
    return SPDSolver(A, tol, method).solve(b)
