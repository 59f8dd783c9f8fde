"""Cholesky carrier for SPD Hessians."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericalError


class HessianFactor:
    """Lower Cholesky factor ``L`` of an SPD matrix ``H = L L^T``.

    Raises:
        NumericalError: if ``H`` is not numerically positive definite.
    """

    __slots__ = ("H", "L", "half_logdet")

    def __init__(self, H, x=None):
        H = np.asarray(H, dtype=float)
        try:
            L = np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            raise NumericalError("Hessian is not positive definite", x=x) from None
        d = np.diag(L)
        if not np.all(np.isfinite(L)) or not np.all(d > 0):
            raise NumericalError("Hessian factorization is degenerate", x=x)
        self.H = H
        self.L = L
        # 0.5 * ln det H
        self.half_logdet = float(np.sum(np.log(d)))

    def solve(self, v):
        """``H^{-1} v``."""
        y = solve_triangular(self.L, v, lower=True, check_finite=False)
        return solve_triangular(self.L.T, y, lower=False, check_finite=False)

    def inv_sqrt_apply(self, g):
        """``L^{-T} g``; maps a standard normal to ``N(0, H^{-1})``."""
        return solve_triangular(self.L.T, g, lower=False, check_finite=False)

    def reconstruction_error(self) -> float:
        """Relative Frobenius error of ``L L^T`` against ``H``."""
        return float(np.linalg.norm(self.L @ self.L.T - self.H) / np.linalg.norm(self.H))


def local_norm(H, v) -> float:
    """``sqrt(v^T H v)``, the norm of ``v`` in the metric ``H``."""
    v = np.asarray(v, dtype=float)
    q = float(v @ (np.asarray(H) @ v))
    return float(np.sqrt(max(q, 0.0)))
