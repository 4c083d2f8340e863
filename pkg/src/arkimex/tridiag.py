"""Tridiagonal systems: LU with partial pivoting and reusable solves.

The kernel comes from the compiled extension ``_tridiag_ext`` when it is
importable, otherwise from the pure-Python ``_tridiag_py``. Setting the
environment variable ``ARKIMEX_PURE_PYTHON=1`` forces the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _tridiag_py

if os.environ.get("ARKIMEX_PURE_PYTHON", "") not in ("", "0"):
    _kernel = _tridiag_py
    BACKEND = "python"
else:
    try:
        from . import _tridiag_ext as _kernel
        BACKEND = "compiled"
    except ImportError:
        _kernel = _tridiag_py
        BACKEND = "python"

KERNELS = {"python": _tridiag_py}
if BACKEND == "compiled":
    KERNELS["compiled"] = _kernel


class SingularMatrixError(ArithmeticError):
    """Exact zero pivot. ``index`` is 0-based within ``block``."""

    def __init__(self, index: int, block: int | None = None):
        self.index = index
        self.block = block
        where = f"block {block}, " if block is not None else ""
        super().__init__(f"singular tridiagonal matrix ({where}zero pivot at row {index})")


class TridiagonalSystem:
    """A tridiagonal matrix given by its sub-, main- and super-diagonals.

    ``factor`` runs the LU factorization once; ``solve`` can then be called
    for any number of right-hand sides.
    """

    def __init__(self, sub, diag, sup, *, kernel=None):
        self.diag = np.array(diag, dtype=float)
        n = self.diag.shape[0]
        if n < 1:
            raise ValueError("tridiagonal system needs dimension >= 1")
        self.sub = np.array(sub, dtype=float).reshape(-1)
        self.sup = np.array(sup, dtype=float).reshape(-1)
        if self.sub.shape[0] != n - 1 or self.sup.shape[0] != n - 1:
            raise ValueError(f"off-diagonals must have length {n - 1}")
        self._kernel = kernel if kernel is not None else _kernel
        self._lu = None

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def factor(self, block: int | None = None) -> "TridiagonalSystem":
        dl, d, du = self.sub.copy(), self.diag.copy(), self.sup.copy()
        du2 = np.zeros(max(self.n - 2, 0))
        ipiv = np.zeros(self.n, dtype="l")
        info = self._kernel.gttrf(dl, d, du, du2, ipiv)
        if info:
            raise SingularMatrixError(info - 1, block)
        self._lu = (dl, d, du, du2, ipiv)
        return self

    def solve(self, rhs) -> np.ndarray:
        if self._lu is None:
            self.factor()
        x = np.array(rhs, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"right-hand side must have shape ({self.n},)")
        self._kernel.gttrs(*self._lu, x)
        return x

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.sup * x[1:]
        return y

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)


def tridiag_factor_solve(system: TridiagonalSystem, rhs) -> np.ndarray:
    return system.solve(rhs)
