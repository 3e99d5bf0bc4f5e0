"""Cylinder sampling shared by the pointwise fits."""
from __future__ import annotations

import numpy as np

from ..core import SpaceTimeField, as_point
from ..errors import OutOfDomainError
from ..solver.cauchy import default_reaction_floor


def default_threshold(u) -> float:
    """10·δ_reg for sampled fields (δ_reg = dx^κ for q > 0, 0 for q = 0); 0 for closed forms."""
    if isinstance(u, SpaceTimeField):
        return 10.0 * default_reaction_floor(u.params, u.dx)
    return 0.0


def _ball_offsets(n, r, count=81, angles=128):
    if n == 1:
        return np.linspace(-r, r, 2 * count - 1)[:, None]
    if n == 2:
        rho = np.linspace(0, r, count)[1:]
        phi = 2 * np.pi * np.arange(angles) / angles
        pts = np.stack([np.outer(rho, np.cos(phi)).ravel(), np.outer(rho, np.sin(phi)).ravel()], axis=1)
        return np.concatenate([np.zeros((1, 2)), pts])
    g = np.linspace(-r, r, 21)
    cube = np.stack(np.meshgrid(*([g] * n), indexing="ij"), axis=-1).reshape(-1, n)
    return cube[np.linalg.norm(cube, axis=1) <= r * (1 + 1e-12)]


def cylinder_samples(u, X0, r: float, quantity: str = "value", future: float = 0.0):
    """Samples of |u| (or |∂ₜu|) on the closed cylinder B_r(x0) × [t0 - r², t0 + future].

    Sampled fields contribute their grid nodes inside the cylinder (the
    cylinder must lie in the box); closed forms are sampled on a fixed polar
    or uniform pattern with 41 time levels.
    """
    n = u.params.n
    X0 = as_point(X0, n)
    x0 = X0.as_array()
    t_lo, t_hi = X0.t - r * r, X0.t + future
    if isinstance(u, SpaceTimeField):
        slack = 1e-9
        if t_lo < u.box[0][0] - slack or t_hi > u.box[0][1] + slack:
            raise OutOfDomainError(f"cylinder of radius {r} leaves the time range {u.box[0]}")
        for (lo, hi), c in zip(u.box[1:], x0):
            if c - r < lo - slack or c + r > hi + slack:
                raise OutOfDomainError(f"cylinder of radius {r} leaves the spatial box")
        T, X = u.mesh()
        tol = 1e-9 * max(1.0, r)
        sel = ((T >= t_lo - tol) & (T <= t_hi + tol)
               & (np.linalg.norm(X - x0, axis=-1) <= r + tol))
        data = u.values if quantity == "value" else u.dt_values
        return np.linalg.norm(data[sel], axis=-1)
    offsets = _ball_offsets(n, r)
    out = []
    for t in np.linspace(t_lo, t_hi, 41):
        if quantity == "value":
            vals = u.value(x0 + offsets, t)
        else:
            vals = u.time_derivative(x0 + offsets, t)
        out.append(np.linalg.norm(vals, axis=-1))
    return np.concatenate(out)


def cylinder_sup(u, X0, r: float, quantity: str = "value") -> float:
    s = cylinder_samples(u, X0, r, quantity)
    return float(np.max(s)) if s.size else 0.0


class Rescaled:
    """u_{r,X0}(x, t) = u(x0 + r x, t0 + r² t) / r^κ, evaluated lazily."""

    def __init__(self, u, X0, r: float):
        self.u = u
        self.params = u.params
        self.X0 = as_point(X0, u.params.n)
        self.r = float(r)
        self._x0 = self.X0.as_array()
        self._scale = r ** -u.params.kappa
        bounds = getattr(u, "spatial_bounds", None)
        self.spatial_bounds = None if bounds is None else tuple(
            ((lo - c) / r, (hi - c) / r) for (lo, hi), c in zip(bounds, self._x0))
        box = getattr(u, "box", None)
        if box is not None:
            self.box = (((box[0][0] - self.X0.t) / r ** 2, (box[0][1] - self.X0.t) / r ** 2),) + self.spatial_bounds

    def _map(self, x, t):
        return self._x0 + self.r * np.asarray(x, dtype=float), self.X0.t + self.r ** 2 * np.asarray(t, dtype=float)

    def value(self, x, t):
        return self.u.value(*self._map(x, t)) * self._scale

    def gradient(self, x, t):
        return self.u.gradient(*self._map(x, t)) * (self._scale * self.r)

    def time_derivative(self, x, t):
        return self.u.time_derivative(*self._map(x, t)) * (self._scale * self.r ** 2)
