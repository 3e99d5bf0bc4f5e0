"""Closed-form solution families: half-space, time-flat, caloric polynomials, zero."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Params, SpaceTimeField, _target_grid
from ..errors import DomainError
from .caloric import Polynomial


def _unit(v, size, name):
    v = np.zeros(size) if v is None else np.asarray(v, dtype=float).ravel()
    if v.size != size:
        raise DomainError(f"{name} must have {size} entries")
    if not v.any():
        v = np.zeros(size)
        v[0] = 1.0
    return v / np.linalg.norm(v)


@dataclass(frozen=True, eq=False)
class ExactSolution:
    """Evaluable closed form with the same interface as a sampled field.

    ``shift`` translates the profile in space: the solution is evaluated at
    x - shift.
    """

    kind: str
    params: Params
    nu: np.ndarray | None = None
    e: np.ndarray | None = None
    poly: Polynomial | None = None
    shift: np.ndarray | None = None

    spatial_bounds = None

    def __post_init__(self):
        if self.kind not in ("halfspace", "time_flat", "caloric_poly", "zero"):
            raise DomainError(f"unknown solution kind {self.kind!r}")
        p = self.params
        if self.kind == "halfspace":
            object.__setattr__(self, "nu", _unit(self.nu, p.n, "nu"))
        if self.kind in ("halfspace", "time_flat"):
            object.__setattr__(self, "e", _unit(self.e, p.m, "e"))
        if self.kind == "caloric_poly":
            if self.poly is None or self.poly.n != p.n or self.poly.m != p.m:
                raise DomainError("caloric_poly needs a polynomial matching (n, m)")
            if not self.poly.heat().is_zero(1e-12):
                raise DomainError("polynomial is not caloric")
        shift = np.zeros(p.n) if self.shift is None else np.asarray(self.shift, dtype=float).ravel()
        object.__setattr__(self, "shift", shift)

    def _x(self, x):
        return np.asarray(x, dtype=float) - self.shift

    def value(self, x, t) -> np.ndarray:
        x = self._x(x)
        lead = x.shape[:-1]
        p = self.params
        if self.kind == "halfspace":
            s = np.maximum(x @ self.nu, 0.0)
            return p.alpha * s[..., None] ** p.kappa * self.e
        if self.kind == "time_flat":
            t = np.broadcast_to(np.asarray(t, dtype=float), lead)
            amp = np.where(t < 0, (-2 * np.minimum(t, 0) / p.kappa) ** (p.kappa / 2), 0.0)
            return amp[..., None] * self.e
        if self.kind == "caloric_poly":
            return self.poly.value(x, t)
        return np.zeros(lead + (p.m,))

    def gradient(self, x, t) -> np.ndarray:
        x = self._x(x)
        lead = x.shape[:-1]
        p = self.params
        if self.kind == "halfspace":
            s = np.maximum(x @ self.nu, 0.0)
            mag = p.alpha * p.kappa * s ** (p.kappa - 1)
            return mag[..., None, None] * np.multiply.outer(self.nu, self.e)
        if self.kind == "caloric_poly":
            return self.poly.gradient(x, t)
        return np.zeros(lead + (p.n, p.m))

    def time_derivative(self, x, t) -> np.ndarray:
        x = self._x(x)
        lead = x.shape[:-1]
        p = self.params
        if self.kind == "time_flat":
            t = np.broadcast_to(np.asarray(t, dtype=float), lead)
            tt = np.minimum(t, 0)
            amp = np.where(t < 0, -(-2 * tt / p.kappa) ** (p.kappa / 2 - 1), 0.0)
            return amp[..., None] * self.e
        if self.kind == "caloric_poly":
            return self.poly.time_derivative(x, t)
        return np.zeros(lead + (p.m,))

    def laplacian(self, x, t) -> np.ndarray:
        x = self._x(x)
        lead = x.shape[:-1]
        p = self.params
        if self.kind == "halfspace":
            s = np.maximum(x @ self.nu, 0.0)
            mag = p.alpha * p.kappa * (p.kappa - 1) * s ** (p.kappa - 2)
            mag = np.where(x @ self.nu > 0, mag, 0.0)
            return mag[..., None] * self.e
        if self.kind == "caloric_poly":
            return self.poly.laplacian().value(x, t)
        return np.zeros(lead + (p.m,))


def halfspace(params: Params, nu=None, e=None, shift=None) -> ExactSolution:
    return ExactSolution("halfspace", params, nu=nu, e=e, shift=shift)


def time_flat(params: Params, e=None) -> ExactSolution:
    return ExactSolution("time_flat", params, e=e)


def caloric(params: Params, terms_or_poly, e=None) -> ExactSolution:
    """Caloric polynomial solution from a Polynomial or a scalar term table
    (exponents ordered (t, x1, …, xn)) times the component vector e."""
    if isinstance(terms_or_poly, Polynomial):
        poly = terms_or_poly
    else:
        ev = _unit(e, params.m, "e")
        poly = Polynomial.from_terms(terms_or_poly, params.n, ev)
    return ExactSolution("caloric_poly", params, poly=poly)


def zero(params: Params) -> ExactSolution:
    return ExactSolution("zero", params)


def exact_sample(sol: ExactSolution, box, shape) -> SpaceTimeField:
    """Sample a closed form on a uniform grid (time axis first)."""
    box = tuple(tuple(b) for b in box)
    if sol.kind == "time_flat" and box[0][1] > 0:
        raise DomainError("time-flat samples are restricted to t <= 0")
    T, X = _target_grid(box, shape)
    return SpaceTimeField(sol.params, box, tuple(shape), sol.value(X, T))
