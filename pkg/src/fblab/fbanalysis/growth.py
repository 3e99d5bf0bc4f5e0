"""Growth, nondegeneracy, vanishing order and time-derivative decay at a point."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DegenerateError, ResolutionError
from .sampling import cylinder_sup, default_threshold


def _sups(u, X0, radii, quantity="value"):
    radii = np.sort(np.asarray(radii, dtype=float))
    return radii, np.array([cylinder_sup(u, X0, r, quantity) for r in radii])


def nondegeneracy_fit(u, X0, radii, threshold: float | None = None) -> float:
    """c_hat = min over radii of sup_{Q_r⁻(X0)} |u| / r^κ."""
    thr = default_threshold(u) if threshold is None else threshold
    radii, S = _sups(u, X0, radii)
    if not S[0] > thr:
        raise ContractError("X0 is not in the closure of the positivity set")
    return float(np.min(S / radii ** u.params.kappa))


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    C_hat: float
    doubling_ok: bool
    radii: np.ndarray
    sups: np.ndarray
    doubling_ratios: np.ndarray

    def __iter__(self):
        yield self.exponent
        yield self.C_hat
        yield self.doubling_ok


def growth_fit(u, X0, radii, doubling_tol: float = 0.05) -> GrowthFit:
    """Least-squares slope of log S(r) against log r with S(r) = sup_{Q_r⁻}|u|.

    The doubling flag requires S(2r) <= 2^κ (1 + doubling_tol) S(r) for every
    pair of supplied radii in ratio 2.
    """
    if len(radii) < 5:
        raise ResolutionError("growth fits need at least five radii")
    radii, S = _sups(u, X0, radii)
    if not np.any(S > 0):
        raise DegenerateError("sup |u| vanishes at every radius")
    pos = S > 0
    if pos.sum() < 2:
        raise DegenerateError("too few radii with nonzero sup")
    slope, intercept = np.polyfit(np.log(radii[pos]), np.log(S[pos]), 1)
    kappa = u.params.kappa
    ratios = []
    ok = True
    for i, r in enumerate(radii):
        j = np.flatnonzero(np.isclose(radii, 2 * r, rtol=1e-9))
        if j.size:
            ratio = S[j[0]] / S[i] if S[i] > 0 else math.inf
            ratios.append(ratio)
            ok &= ratio <= 2 ** kappa * (1 + doubling_tol)
    return GrowthFit(float(slope), float(math.exp(intercept)), bool(ok), radii, S, np.array(ratios))


def admissible_orders(kappa: float) -> list:
    orders = [float(k) for k in range(1, int(math.floor(kappa + 1e-12)) + 1)]
    if all(abs(kappa - o) > 1e-12 for o in orders):
        orders.append(float(kappa))
    return orders


def vanishing_order(u, X0, radii, tie_margin: float = 0.05):
    """Fitted growth exponent snapped to {1, …, ⌊κ⌋, κ}; None when the two
    nearest admissible values are within ``tie_margin`` of equidistant."""
    fit = growth_fit(u, X0, radii)
    orders = admissible_orders(u.params.kappa)
    dist = sorted((abs(fit.exponent - o), o) for o in orders)
    if len(dist) > 1 and dist[1][0] - dist[0][0] < tie_margin:
        return None
    best = dist[0][1]
    return int(best) if float(best).is_integer() else best


@dataclass(frozen=True)
class TimeDecay:
    exponent: float | None
    time_independent: bool
    radii: np.ndarray
    sups: np.ndarray


def time_derivative_decay(u, X0, radii, noise: float | None = None) -> TimeDecay:
    """Log-log slope of sup_{Q_r⁻}|∂ₜu| against r.

    ``noise`` defaults to 1e-10 times sup|u| on the largest cylinder (plus
    the time-difference error scale dt·sup|u| for sampled fields).
    """
    if len(radii) < 2:
        raise ResolutionError("need at least two radii")
    radii, S = _sups(u, X0, radii, "dt")
    if noise is None:
        scale = max(1e-300, cylinder_sup(u, X0, float(radii[-1])))
        noise = 1e-10 * scale
    if np.all(S <= noise):
        return TimeDecay(None, True, radii, S)
    pos = S > noise
    if pos.sum() < 2:
        return TimeDecay(None, False, radii, S)
    slope, _ = np.polyfit(np.log(radii[pos]), np.log(S[pos]), 1)
    return TimeDecay(float(slope), False, radii, S)
