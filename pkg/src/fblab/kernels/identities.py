"""Numerical forms of three Gaussian-weighted inequalities/identities:

* a pointwise bound for caloric functions by their weighted L² mass at an
  earlier time;
* a weighted Poincaré-type inequality at fixed t < 0;
* invariance of the quadratic part of the balanced energy under subtraction
  of a κ-self-similar caloric function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import QuadratureRule, gauss_slab, spatial_gauss_integral


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float
    err: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.err

    @property
    def margin(self) -> float:
        return self.rhs + self.err - self.lhs


def caloric_pointwise_bound(h, s: float, t: float, x, rule: QuadratureRule | None = None) -> InequalityCheck:
    """e^{|x|²/(t+s)} |h(x,t)|² <= (√3 s/(s-t))ⁿ ∫|h(y,s)|² G(y,s) dy for s < t <= 0.

    ``h`` is any object with value(x, t); ``x`` is an array of spatial points.
    The check reports the worst point.
    """
    rule = rule or QuadratureRule()
    if not s < t <= 0:
        raise ValueError("need s < t <= 0")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[-1]
    mass = spatial_gauss_integral(lambda y: np.sum(h.value(y, s) ** 2, axis=-1), s, rule, n)
    factor = (math.sqrt(3.0) * s / (s - t)) ** n
    lhs = np.exp(np.sum(x * x, axis=-1) / (t + s)) * np.sum(h.value(x, t) ** 2, axis=-1)
    return InequalityCheck(float(np.max(lhs)), factor * mass.value, factor * mass.err)


@dataclass(frozen=True, eq=False)
class BumpField:
    """Smooth compactly supported vector field Σ_k a_k ψ((x - c_k)/ρ_k),
    ψ(y) = exp(-1/(1 - |y|²)) on |y| < 1."""

    centers: np.ndarray
    radii: np.ndarray
    amplitudes: np.ndarray

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        y = (x[..., None, :] - self.centers) / self.radii[:, None]
        s = np.sum(y * y, axis=-1)
        inside = s < 1
        den = np.where(inside, 1 - s, 1.0)
        psi = np.where(inside, np.exp(-1 / den), 0.0)
        # ∇ψ = ψ · (-2 y / (1-s)²) / ρ
        dpsi = np.where(inside[..., None], psi[..., None] * (-2 * y / den[..., None] ** 2), 0.0)
        dpsi = dpsi / self.radii[:, None]
        return psi, dpsi

    def value(self, x, t=None):
        psi, _ = self._parts(x)
        return psi @ self.amplitudes

    def gradient(self, x, t=None):
        _, dpsi = self._parts(x)
        return np.einsum("...ki,km->...im", dpsi, self.amplitudes)


def random_bump_field(rng: np.random.Generator, n: int, m: int, count: int = 3, spread: float = 2.0) -> BumpField:
    centers = rng.uniform(-spread, spread, size=(count, n))
    radii = rng.uniform(0.5, 1.5, size=count)
    amps = rng.normal(size=(count, m))
    return BumpField(centers, radii, amps)


def weighted_poincare(w, t: float, n: int, rule: QuadratureRule | None = None) -> InequalityCheck:
    """∫|w|² (|x|²/(-t)) G dx <= 4 ∫ (n|w|² - 4t|∇w|²) G dx at fixed t < 0."""
    rule = rule or QuadratureRule(nodes_per_axis=256)

    def left(x):
        return np.sum(w.value(x) ** 2, axis=-1) * np.sum(x * x, axis=-1) / (-t)

    def right(x):
        return 4 * (n * np.sum(w.value(x) ** 2, axis=-1) - 4 * t * np.sum(w.gradient(x) ** 2, axis=(-2, -1)))

    L = spatial_gauss_integral(left, t, rule, n)
    R = spatial_gauss_integral(right, t, rule, n)
    return InequalityCheck(L.value, R.value, L.err + R.err)


def quadratic_weiss_part(w, t1: float, t2: float, kappa: float, n: int, rule: QuadratureRule | None = None):
    """∫_{t1}^{t2} ∫ (|∇w|² + κ|w|²/(2t)) G dx dt for an object w with value/gradient."""
    rule = rule or QuadratureRule()

    def integrand(x, t):
        return np.sum(w.gradient(x, t) ** 2, axis=(-2, -1)) + kappa * np.sum(w.value(x, t) ** 2, axis=-1) / (2 * t)

    return gauss_slab(integrand, t1, t2, rule, n)


@dataclass(frozen=True, eq=False)
class Difference:
    """p - u as an evaluable object."""

    a: object
    b: object

    def value(self, x, t):
        return self.a.value(x, t) - self.b.value(x, t)

    def gradient(self, x, t):
        return self.a.gradient(x, t) - self.b.gradient(x, t)


def weiss_quadratic_invariance(p, u, t1: float, t2: float, kappa: float, n: int,
                               rule: QuadratureRule | None = None) -> tuple:
    """Quadratic balanced-energy parts of (p - u) and u over (t1, t2); equal when
    p is κ-self-similar and caloric. Returns (lhs, rhs, combined error)."""
    lhs = quadratic_weiss_part(Difference(p, u), t1, t2, kappa, n, rule)
    rhs = quadratic_weiss_part(u, t1, t2, kappa, n, rule)
    return lhs.value, rhs.value, lhs.err + rhs.err
