"""Cyclic (periodic) tridiagonal solver applied along one axis of a field.

The implicit ADI stages solve (I - a*A_j) x = rhs. Along each grid line in
direction j this is a circulant tridiagonal system with diagonal 1 + 2c and
off-diagonals -c, c = a * d_jj / dx_j^2. It is solved with the Thomas algorithm
plus a Sherman-Morrison correction for the two corner entries. No pivoting is
needed because the matrix is strictly diagonally dominant.
"""

from functools import lru_cache

import numpy as np

from adipal.common import ParameterError, StructureError


class CyclicTridiagonalSolver:
    """Factorization of a constant-coefficient periodic tridiagonal matrix.

    Row l reads ``sub * x[l-1] + diag * x[l] + sup * x[l+1]`` with indices mod n.
    The factorization is shared by every line of a field, so one instance
    solves all lines of a direction at once.
    """

    def __init__(self, n: int, sub: float, diag: float, sup: float):
        if n < 3:
            raise StructureError(f"Cyclic tridiagonal systems need n >= 3, got {n}")
        if abs(diag) <= abs(sub) + abs(sup):
            raise ParameterError(
                f"Matrix is not strictly diagonally dominant (diag={diag}, sub={sub}, sup={sup})"
            )
        self.n = n
        self.sub = sub
        self.diag = diag
        self.sup = sup

        # Sherman-Morrison: A = T + u v^T with u = (g, 0, ..., 0, sup), v = (1, 0, ..., 0, sub/g);
        # the corners are A[0, n-1] = sub and A[n-1, 0] = sup
        self.gamma = -diag
        b = np.full(n, float(diag))
        b[0] = diag - self.gamma
        b[-1] = diag - sub * sup / self.gamma
        self._b = b

        # Thomas forward coefficients of T
        cp = np.empty(n)
        denom = np.empty(n)
        denom[0] = b[0]
        cp[0] = sup / b[0]
        for i in range(1, n):
            denom[i] = b[i] - sub * cp[i - 1]
            cp[i] = sup / denom[i]
        self._cp = cp
        self._denom = denom

        corner = np.zeros(n)
        corner[0] = self.gamma
        corner[-1] = sup
        z = self._thomas(corner[:, None])[:, 0]
        self._z = z
        self._z_factor = 1.0 + z[0] + sub * z[-1] / self.gamma

    def _thomas(self, rhs: np.ndarray) -> np.ndarray:
        # rhs has shape (n, lines)
        n = self.n
        x = np.empty_like(rhs)
        x[0] = rhs[0] / self._denom[0]
        for i in range(1, n):
            x[i] = (rhs[i] - self.sub * x[i - 1]) / self._denom[i]
        for i in range(n - 2, -1, -1):
            x[i] -= self._cp[i] * x[i + 1]
        return x

    def solve_lines(self, rhs: np.ndarray) -> np.ndarray:
        """Solve for every column of a (n, lines) array."""
        y = self._thomas(rhs)
        correction = (y[0] + self.sub * y[-1] / self.gamma) / self._z_factor
        return y - self._z[:, None] * correction[None, :]

    def solve(self, rhs: np.ndarray, axis: int = 0) -> np.ndarray:
        """Solve along ``axis`` of an array of any dimension; rhs is not modified."""
        rhs = np.asarray(rhs)
        if rhs.shape[axis] != self.n:
            raise StructureError(f"Axis {axis} has length {rhs.shape[axis]}, solver expects {self.n}")
        dtype = np.result_type(rhs, float)
        moved = np.moveaxis(rhs, axis, 0)
        lines = moved.reshape(self.n, -1).astype(dtype, copy=True)
        solved = self.solve_lines(lines)
        return np.moveaxis(solved.reshape(moved.shape), 0, axis)

    def matrix(self) -> np.ndarray:
        """Dense matrix, for checks at small sizes."""
        n = self.n
        A = np.zeros((n, n))
        idx = np.arange(n)
        A[idx, idx] = self.diag
        A[idx, (idx - 1) % n] += self.sub
        A[idx, (idx + 1) % n] += self.sup
        return A


@lru_cache(maxsize=64)
def diffusion_line_solver(n: int, coupling: float) -> CyclicTridiagonalSolver:
    """Cached solver for I - a*A_j on a line of n points, coupling = a * d_jj / dx_j^2.

    Step size and theta are fixed within a run, so each direction hits the
    cache on every step after the first.
    """
    if coupling < 0.0:
        raise ParameterError(f"Coupling a*kappa must be >= 0, got {coupling}")
    return CyclicTridiagonalSolver(n, -coupling, 1.0 + 2.0 * coupling, -coupling)
