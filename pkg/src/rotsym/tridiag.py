"""Factor-once, solve-many tridiagonal systems (LAPACK gttrf/gttrs)."""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack


class SingularSystemError(ArithmeticError):
    pass


class TridiagonalLU:
    """LU factorization of a complex tridiagonal matrix with partial pivoting.

    ``lower``/``upper`` may be scalars (constant off-diagonals) or arrays of
    length ``len(main) - 1``.
    """

    def __init__(self, lower, main, upper):
        main = np.asarray(main, dtype=complex)
        m = main.size
        lower = np.broadcast_to(np.asarray(lower, dtype=complex), (m - 1,)).copy()
        upper = np.broadcast_to(np.asarray(upper, dtype=complex), (m - 1,)).copy()
        self.size = m
        if m < 3:
            # the LAPACK wrappers reject the length-0 second superdiagonal
            self._dense = np.diag(main) + np.diag(lower, -1) + np.diag(upper, 1)
            if np.linalg.matrix_rank(self._dense) < m:
                raise SingularSystemError("tridiagonal matrix is singular")
            return
        self._dense = None
        dl, d, du, du2, ipiv, info = lapack.zgttrf(lower, main.copy(), upper)
        if info != 0:
            raise SingularSystemError(f"tridiagonal matrix is singular (zgttrf info={info})")
        self._factors = (dl, d, du, du2, ipiv)

    def solve(self, b, adjoint: bool = False) -> np.ndarray:
        """Solve ``T x = b`` (or ``T^H x = b`` with ``adjoint``)."""
        b = np.asarray(b, dtype=complex)
        if self._dense is not None:
            a = self._dense.conj().T if adjoint else self._dense
            return np.linalg.solve(a, b.reshape(self.size, -1)).reshape(b.shape)
        x, info = lapack.zgttrs(*self._factors, b.reshape(self.size, -1), trans="C" if adjoint else "N")
        if info != 0:
            raise SingularSystemError(f"zgttrs failed (info={info})")
        return x.reshape(b.shape)


def tridiag_matvec(lower, main, upper, x) -> np.ndarray:
    """``T x`` for tridiagonal ``T`` given by its three diagonals (scalars broadcast)."""
    y = main * x
    y[1:] += lower * x[:-1]
    y[:-1] += upper * x[1:]
    return y
