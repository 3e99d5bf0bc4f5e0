"""Ornstein-Uhlenbeck operator -d²/dx² + x d/dx on the half-line."""
from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ..errors import ConvergenceError, DomainError


def _weighted_tridiagonal(grid: int, truncation: float):
    """Symmetrized finite-volume matrix of -e^{x²/2}(e^{-x²/2} w')' on
    (0, R) with Dirichlet ends; ``grid`` intervals, grid-1 unknowns.

    With ρ = e^{-x²/2} the generalized problem A w = λ D w (D = diag ρ_i) is
    turned into the symmetric matrix D^{-1/2} A D^{-1/2}; entries are formed
    from exponent differences so nothing under/overflows at large x.
    """
    h = truncation / grid
    x = h * np.arange(1, grid)
    xp = x + h / 2
    xm = x - h / 2
    diag = (np.exp(-(xp ** 2 - x ** 2) / 2) + np.exp(-(xm ** 2 - x ** 2) / 2)) / h ** 2
    off = -np.exp(-xp[:-1] ** 2 / 2 + (x[:-1] ** 2 + x[1:] ** 2) / 4) / h ** 2
    return diag, off


def _lowest(grid, truncation, k):
    d, e = _weighted_tridiagonal(grid, truncation)
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
    Bv = d[:, None] * vecs
    Bv[:-1] += e[:, None] * vecs[1:]
    Bv[1:] += e[:, None] * vecs[:-1]
    residual = float(np.max(np.linalg.norm(Bv - vecs * vals, axis=0)))
    return vals, residual


def ou_halfline_spectrum(k: int, grid: int = 2000, truncation: float = 12.0, check_truncation: bool = True,
                         residual_tol: float = 1e-8) -> list:
    """Lowest k Dirichlet eigenvalues of -w'' + x w' on (0, ∞), truncated to (0, R).

    With ``check_truncation`` the computation is repeated on (0, R+1) at the
    same spacing and a ConvergenceError is raised if any eigenvalue moves by
    1e-3 or more.
    """
    if not 1 <= k <= 5:
        raise DomainError("k must be between 1 and 5")
    if grid < 500:
        raise DomainError("use at least 500 grid nodes")
    vals, residual = _lowest(grid, truncation, k)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if residual > residual_tol * scale:
        raise ConvergenceError(f"eigen-iteration residual {residual:.3e} above tolerance", residual)
    if check_truncation:
        h = truncation / grid
        longer = int(round((truncation + 1.0) / h))
        vals2, _ = _lowest(longer, longer * h, k)
        shift = float(np.max(np.abs(vals2 - vals)))
        if shift >= 1e-3:
            raise ConvergenceError(f"eigenvalues move by {shift:.2e} when the truncation grows by 1", shift)
    return [float(v) for v in vals]
