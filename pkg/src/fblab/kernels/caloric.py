"""Space-time polynomials, the caloric basis and caloric least-squares fits."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..core import EnergyCurve, SpaceTimeField, as_point
from ..errors import DomainError, ResolutionError


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Σ_k c_k (t - t0)^{a_k} Π_i (x_i - x0_i)^{b_ki}, with vector coefficients.

    ``exps`` is an integer array (K, n+1) holding (a_k, b_k1, …, b_kn);
    ``coeffs`` has shape (K, m).
    """

    exps: np.ndarray
    coeffs: np.ndarray
    center: tuple | None = None

    def __post_init__(self):
        exps = np.array(self.exps, dtype=int).reshape(-1, np.shape(self.exps)[-1])
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if len(exps) != len(coeffs):
            raise DomainError("one coefficient row per monomial required")
        object.__setattr__(self, "exps", exps)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_terms(cls, terms: dict, n: int, e=None, center=None) -> "Polynomial":
        """``terms`` maps (t_pow, x1_pow, …) to scalar coefficients; the result is
        multiplied by the component vector ``e`` (default: scalar, m=1)."""
        e = np.array([1.0]) if e is None else np.asarray(e, dtype=float)
        keys = list(terms) or [(0,) * (n + 1)]
        exps = np.array(keys, dtype=int).reshape(-1, n + 1)
        coeffs = np.array([terms.get(k, 0.0) for k in keys], dtype=float)[:, None] * e[None, :]
        return cls(exps, coeffs, center)

    @property
    def n(self) -> int:
        return self.exps.shape[1] - 1

    @property
    def m(self) -> int:
        return self.coeffs.shape[1]

    @property
    def parabolic_degrees(self) -> np.ndarray:
        return 2 * self.exps[:, 0] + self.exps[:, 1:].sum(axis=1)

    @property
    def degree(self) -> int:
        live = np.any(self.coeffs != 0, axis=1)
        return int(self.parabolic_degrees[live].max()) if live.any() else 0

    def _local(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        if self.center is not None:
            x = x - np.asarray(self.center[0], dtype=float)
            t = t - float(self.center[1])
        return x, t

    def _monomials(self, x, t, exps):
        out = np.ones(x.shape[:-1] + (len(exps),))
        for k, row in enumerate(exps):
            val = t ** row[0] if row[0] else np.ones(x.shape[:-1])
            for i, b in enumerate(row[1:]):
                if b:
                    val = val * x[..., i] ** b
            out[..., k] = val
        return out

    def value(self, x, t) -> np.ndarray:
        x, t = self._local(x, t)
        return self._monomials(x, t, self.exps) @ self.coeffs

    __call__ = value

    def derivative(self, axis: int) -> "Polynomial":
        """Partial derivative; axis 0 is time, axis i is x_i."""
        k = self.exps[:, axis]
        keep = k > 0
        exps = self.exps[keep].copy()
        exps[:, axis] -= 1
        coeffs = self.coeffs[keep] * k[keep, None]
        if not keep.any():
            return Polynomial(np.zeros((1, self.n + 1), dtype=int), np.zeros((1, self.m)), self.center)
        return Polynomial(exps, coeffs, self.center)

    def gradient(self, x, t) -> np.ndarray:
        return np.stack([self.derivative(i).value(x, t) for i in range(1, self.n + 1)], axis=-2)

    def time_derivative(self, x, t) -> np.ndarray:
        return self.derivative(0).value(x, t)

    def laplacian(self) -> "Polynomial":
        parts = [self.derivative(i).derivative(i) for i in range(1, self.n + 1)]
        return Polynomial.sum(parts)

    def heat(self) -> "Polynomial":
        """H p = Δp - ∂ₜp, simplified."""
        return Polynomial.sum([self.laplacian(), self.derivative(0).scaled(-1.0)])

    def scaled(self, c) -> "Polynomial":
        return Polynomial(self.exps, self.coeffs * c, self.center)

    def simplified(self) -> "Polynomial":
        table: dict = {}
        for row, c in zip(map(tuple, self.exps), self.coeffs):
            table[row] = table.get(row, 0.0) + c
        keys = [k for k, v in table.items() if np.any(v != 0)]
        if not keys:
            return Polynomial(np.zeros((1, self.n + 1), dtype=int), np.zeros((1, self.m)), self.center)
        return Polynomial(np.array(keys), np.array([table[k] for k in keys]), self.center)

    @staticmethod
    def sum(polys) -> "Polynomial":
        polys = list(polys)
        return Polynomial(np.concatenate([p.exps for p in polys]), np.concatenate([p.coeffs for p in polys]),
                          polys[0].center).simplified()

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial.sum([self, other])

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial.sum([self, other.scaled(-1.0)])

    def is_zero(self, tol=0.0) -> bool:
        return bool(np.all(np.abs(self.simplified().coeffs) <= tol))

    def terms(self) -> dict:
        """Scalar view {exponent tuple: coefficient} of the first component."""
        s = self.simplified()
        return {tuple(int(v) for v in k): float(c[0]) for k, c in zip(s.exps, s.coeffs) if c[0] != 0}


def _multi_indices(n: int, total: int):
    for mu in itertools.product(range(total + 1), repeat=n):
        if sum(mu) == total:
            yield mu[::-1]


def heat_polynomial(mu, n: int) -> Polynomial:
    """p_μ(x, t) = Σ_k t^k/k! Δ^k x^μ, caloric with parabolic degree |μ|."""
    terms: dict = {}
    current = {tuple(mu): 1.0}
    k = 0
    while current:
        for xm, c in current.items():
            key = (k,) + xm
            terms[key] = terms.get(key, 0.0) + c / math.factorial(k)
        nxt: dict = {}
        for xm, c in current.items():
            for i, b in enumerate(xm):
                if b >= 2:
                    lowered = list(xm)
                    lowered[i] -= 2
                    lowered = tuple(lowered)
                    nxt[lowered] = nxt.get(lowered, 0.0) + c * b * (b - 1)
        current = nxt
        k += 1
    return Polynomial.from_terms(terms, n)


def caloric_basis(degree: int, n: int) -> list:
    """Basis of caloric polynomials of parabolic degree <= degree (x counts 1,
    t counts 2): one heat polynomial per spatial multi-index |μ| <= degree."""
    if degree < 0:
        raise DomainError("degree must be nonnegative")
    if degree > 4:
        raise DomainError("caloric basis is limited to degree <= 4")
    return [heat_polynomial(mu, n) for d in range(degree + 1) for mu in _multi_indices(n, d)]


def _cylinder_nodes(u: SpaceTimeField, X0, r):
    T, X = u.mesh()
    x0 = np.asarray(X0.x)
    inside = (np.linalg.norm(X - x0, axis=-1) <= r * (1 + 1e-12)) & (T <= X0.t + 1e-12) & (T >= X0.t - r * r - 1e-12)
    return T[inside], X[inside], u.values[inside]


def caloric_fit(u: SpaceTimeField, X0, degree: int, radii) -> tuple:
    """Least-squares caloric fit on the smallest backward cylinder Q_r⁻(X0).

    Returns the fitted polynomial (centered at X0) and an EnergyCurve holding
    the max-norm misfit sup_{Q_r⁻}|u - P| at every radius.
    """
    X0 = as_point(X0, u.params.n)
    radii = np.sort(np.asarray(radii, dtype=float))
    n = u.params.n
    basis = caloric_basis(degree, n)
    r0 = radii[0]
    T, X, V = _cylinder_nodes(u, X0, r0)
    if len(T) < len(basis):
        raise ResolutionError(f"{len(T)} nodes in the smallest cylinder for {len(basis)} basis functions")
    xi = (X - np.asarray(X0.x)) / r0
    tau = (T - X0.t) / r0 ** 2
    A = np.concatenate([b.value(xi, tau) for b in basis], axis=-1)
    if np.linalg.matrix_rank(A) < len(basis):
        raise ResolutionError("cylinder samples do not determine the caloric fit")
    coef, *_ = np.linalg.lstsq(A, V, rcond=None)
    # undo the scaling: p(ξ, τ) = r^{-deg} p(x - x0, t - t0) for heat polynomials
    parts = []
    for b, c in zip(basis, coef):
        scale = r0 ** (-b.degree)
        parts.append(Polynomial(b.exps, np.outer(b.coeffs[:, 0], c) * scale))
    P = Polynomial.sum(parts)
    P = Polynomial(P.exps, P.coeffs, (tuple(X0.x), X0.t))
    misfit = []
    for r in radii:
        Tr, Xr, Vr = _cylinder_nodes(u, X0, r)
        misfit.append(float(np.max(np.linalg.norm(Vr - P.value(Xr, Tr), axis=-1))) if len(Tr) else 0.0)
    curve = EnergyCurve(radii, np.array(misfit), np.zeros(len(radii)), np.zeros(len(radii)))
    return P, curve
