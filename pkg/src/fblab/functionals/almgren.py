"""Parabolic Almgren frequency for caloric functions."""
from __future__ import annotations

import warnings

import numpy as np

from ..core import EnergyCurve, SpaceTimeField, as_point
from ..errors import DegenerateError, DomainError
from ..kernels.quadrature import QuadratureRule, gauss_slab

CALORIC_RESIDUAL_TOL = 1e-6


class NotCaloricWarning(UserWarning):
    pass


def _caloric_residual(h, X0, r) -> float:
    """Relative sup of |Δh - ∂ₜh| on a sample of the slab around X0."""
    x0 = X0.as_array()
    n = len(x0)
    if isinstance(h, SpaceTimeField):
        res = h.laplacian_values - h.dt_values
        T, X = h.mesh()
        lo, hi = X0.t - 4 * r * r, X0.t - r * r
        sel = h.interior_mask() & (T >= lo - h.dt) & (T <= hi + h.dt)
        if not sel.any():
            return 0.0
        scale = max(1.0, float(np.max(np.abs(h.values[sel]))))
        return float(np.max(np.abs(res[sel]))) / scale
    if hasattr(h, "laplacian"):
        rng = np.random.default_rng(1)
        pts = x0 + rng.uniform(-2 * r, 2 * r, size=(64, n))
        times = X0.t - r * r * rng.uniform(1, 4, size=64)
        worst, scale = 0.0, 1.0
        for x, t in zip(pts, times):
            lap = h.laplacian(x[None], t)
            dt = h.time_derivative(x[None], t)
            worst = max(worst, float(np.max(np.abs(lap - dt))))
            scale = max(scale, float(np.max(np.abs(h.value(x[None], t)))))
        return worst / scale
    return 0.0


def almgren(h, r: float, X0=None, rule: QuadratureRule | None = None,
            residual_tol: float = CALORIC_RESIDUAL_TOL) -> float:
    """𝒩(r) = ∫∫|∇h|²G / ∫∫|h|²G/(-t) over the slab (-4r², -r²) around X0.

    Inputs whose heat residual exceeds ``residual_tol`` produce a
    NotCaloricWarning; the value is still returned.
    """
    if r <= 0:
        raise DomainError("radius must be positive")
    rule = rule or QuadratureRule()
    n = h.params.n
    X0 = as_point(X0, n)
    resid = _caloric_residual(h, X0, r)
    if resid > residual_tol:
        warnings.warn(f"input is not numerically caloric (relative residual {resid:.2e})", NotCaloricWarning,
                      stacklevel=2)
    bounds = getattr(h, "spatial_bounds", None)
    t0 = X0.t

    def top(x, t):
        return np.sum(h.gradient(x, t) ** 2, axis=(-2, -1))

    def bottom(x, t):
        return np.sum(h.value(x, t) ** 2, axis=-1) / (t0 - t)

    num = gauss_slab(top, -4 * r * r, -r * r, rule, n, X0, bounds)
    den = gauss_slab(bottom, -4 * r * r, -r * r, rule, n, X0, bounds)
    if abs(den.value) <= max(10 * den.err, 1e-300):
        raise DegenerateError("h vanishes on the slab; the frequency is undefined")
    return num.value / den.value


def almgren_curve(h, radii, X0=None, rule: QuadratureRule | None = None) -> EnergyCurve:
    radii = np.sort(np.asarray(radii, dtype=float))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NotCaloricWarning)
        vals = np.array([almgren(h, r, X0, rule) for r in radii])
    for w in caught[:1]:
        warnings.warn(w.message, NotCaloricWarning, stacklevel=2)
    return EnergyCurve(radii, vals, np.zeros(len(radii)), np.zeros(len(radii)))
