"""Checked dense solves: pivoted LU via LAPACK plus condition screening.

Matrices here are tiny (N = number of graph vertices), so a full SVD-based
condition number is affordable and preferred over estimates.  Anything above
COND_CAP is treated as non-invertible: the M-matrix formulas have genuine
poles and refusing is the only honest answer near them.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularMatrixError

COND_CAP = 1e14

__all__ = ["COND_CAP", "cond2", "solve_checked", "inv_checked"]


def cond2(a: np.ndarray) -> float:
    """2-norm condition number; +inf for singular or non-finite input."""
    if a.size == 0:
        return 1.0
    if not np.all(np.isfinite(a)):
        return np.inf
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def solve_checked(a, b, cap: float = COND_CAP, exc=SingularMatrixError, what: str = "matrix"):
    """Solve a @ x = b, refusing when cond_2(a) exceeds cap."""
    a = np.asarray(a)
    c = cond2(a)
    if not np.isfinite(c) or c > cap:
        raise exc(f"{what} singular or ill-conditioned (cond ~ {c:.3g})")
    return np.linalg.solve(a, b)


def inv_checked(a, cap: float = COND_CAP, exc=SingularMatrixError, what: str = "matrix"):
    """Inverse of a with the same condition screening as solve_checked."""
    a = np.asarray(a)
    return solve_checked(a, np.eye(a.shape[0], dtype=complex), cap=cap, exc=exc, what=what)
