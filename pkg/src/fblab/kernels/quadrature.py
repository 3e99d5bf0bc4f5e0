"""Backward heat kernel and Gaussian-weighted slab quadrature.

Integrals ∫∫ F(x, t) G(x, t) dx dt are computed in the similarity variable
z = x / √(-4t), where G dx becomes π^(-n/2) e^{-|z|²} dz. Each spatial axis is
covered by composite Gauss-Legendre panels on [-R_cut, R_cut] (split at the
recentering point so kinks through it sit on panel edges); time uses
composite Gauss-Legendre panels. The error estimate is the difference to a
rule with half as many panels in every direction plus the discarded tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from ..core import SpaceTimePoint, as_point
from ..errors import DomainError, OutOfDomainError

PANEL_ORDER = 8


def heat_kernel(x, t) -> np.ndarray:
    """G(x, t) = (-4πt)^(-n/2) exp(|x|²/(4t)) for t < 0, 0 for t >= 0.

    ``x`` has trailing axis of length n; ``t`` broadcasts against x[..., 0].
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    n = x.shape[-1]
    t = np.asarray(t, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    neg = t < 0
    ts = np.where(neg, t, -1.0)
    g = (-4 * np.pi * ts) ** (-n / 2) * np.exp(r2 / (4 * ts))
    return np.where(neg, g, 0.0)


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def composite_nodes(a: float, b: float, panels: int, order: int = PANEL_ORDER, split=None):
    """Composite Gauss-Legendre nodes/weights on [a, b]. ``split`` (a number
    or a sequence) forces panel edges; panels are shared out by length."""
    if b <= a:
        return np.empty(0), np.empty(0)
    cuts = sorted({float(c) for c in np.atleast_1d(split if split is not None else []) if a < c < b})
    if cuts:
        edges = [a] + cuts + [b]
        parts = [composite_nodes(lo, hi, max(1, round(panels * (hi - lo) / (b - a))), order)
                 for lo, hi in zip(edges[:-1], edges[1:])]
        return np.concatenate([x for x, _ in parts]), np.concatenate([w for _, w in parts])
    g, w = _gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class QuadratureRule:
    similarity_cutoff: float = 8.0
    nodes_per_axis: int = 128
    time_subdivisions: int = 4

    def __post_init__(self):
        if self.similarity_cutoff <= 0:
            raise DomainError("similarity cutoff must be positive")
        if self.nodes_per_axis < 2 * PANEL_ORDER or self.time_subdivisions < 1:
            raise DomainError(f"need nodes_per_axis >= {2 * PANEL_ORDER} and time_subdivisions >= 1")

    @property
    def panels(self) -> int:
        return max(2, self.nodes_per_axis // PANEL_ORDER)

    def tail_bound(self, n: int) -> float:
        """Gaussian mass outside the cube |z_i| <= R_cut, bounded by n·erfc(R_cut)
        (itself below n·exp(-R_cut²)/(R_cut·√π))."""
        return n * float(erfc(self.similarity_cutoff))

    def coarsened(self) -> "QuadratureRule":
        return QuadratureRule(self.similarity_cutoff, max(2 * PANEL_ORDER, self.nodes_per_axis // 2),
                              max(1, self.time_subdivisions // 2))


@dataclass(frozen=True)
class Integral:
    value: float
    err: float

    def __iter__(self):
        yield self.value
        yield self.err


def _axis_interval(R, lo, hi, c, sigma):
    """z-interval on one axis, clipped to the sampled box if any."""
    a, b = -R, R
    if lo is not None:
        a = max(a, (lo - c) / sigma)
        b = min(b, (hi - c) / sigma)
    return a, b


def _slab_pass(integrand, t1, t2, n, x0, t0, bounds, R, panels, tpanels, breaks=None):
    """One quadrature pass. Returns (integral, discarded_mass_times_sup)."""
    tn, tw = composite_nodes(t1, t2, tpanels)
    total = 0.0
    tail = 0.0
    norm = math.pi ** (-n / 2)
    for s, ws in zip(tn, tw):
        sigma = math.sqrt(-4.0 * s)
        nodes_1d, weights_1d, kept = [], [], 1.0
        for i in range(n):
            lo, hi = (bounds[i] if bounds is not None else (None, None))
            a, b = _axis_interval(R, lo, hi, x0[i], sigma)
            if b <= a:
                raise OutOfDomainError(f"quadrature slab at t={t0 + s} misses the sampled box")
            cuts = [0.0]
            if breaks is not None and breaks[i] is not None:
                cuts += [(c - x0[i]) / sigma for c in breaks[i]]
            z, w = composite_nodes(a, b, panels, split=cuts)
            nodes_1d.append(z)
            weights_1d.append(w * np.exp(-z * z))
            kept *= 0.5 * (math.erf(b) - math.erf(a))
        grids = np.meshgrid(*nodes_1d, indexing="ij")
        Z = np.stack(grids, axis=-1).reshape(-1, n)
        W = weights_1d[0]
        for w in weights_1d[1:]:
            W = np.multiply.outer(W, w)
        W = W.ravel() * norm
        vals = np.asarray(integrand(x0 + sigma * Z, t0 + s), dtype=float)
        total += ws * float(np.dot(W, vals))
        # mass outside the integration region times the largest sampled |F|
        tail += ws * (1.0 - kept) * float(np.max(np.abs(vals)))
    return total, tail


def gauss_slab(integrand, t1: float, t2: float, rule: QuadratureRule, n: int, X0=None, bounds=None,
               breaks=None) -> Integral:
    """∫_{t1}^{t2} ∫ F(x0 + y, t0 + s) G(y, s) dy ds with s in (t1, t2).

    ``integrand(x, t)`` receives absolute coordinates x (N, n) and a scalar t
    and returns N values. ``bounds`` (list of n (lo, hi) pairs, absolute)
    clips the spatial domain for sampled fields; the discarded Gaussian mass
    enters the error estimate. ``breaks`` (per axis, absolute coordinates or
    None) puts panel edges on known jumps of F, e.g. the ends of an indicator.
    """
    if not t1 < t2:
        raise DomainError("slab needs t1 < t2")
    if t2 > 0:
        raise DomainError("slab must end at or before the kernel's singular time 0")
    X0 = as_point(X0, n)
    x0 = X0.as_array()
    R = rule.similarity_cutoff
    fine, tail = _slab_pass(integrand, t1, t2, n, x0, X0.t, bounds, R, rule.panels, rule.time_subdivisions,
                            breaks)
    coarse_rule = rule.coarsened()
    coarse, _ = _slab_pass(integrand, t1, t2, n, x0, X0.t, bounds, R, coarse_rule.panels,
                           coarse_rule.time_subdivisions, breaks)
    err = abs(fine - coarse) + tail + 1e-15 * abs(fine)
    return Integral(fine, err)


def slab_integral(f, t1: float, t2: float, rule: QuadratureRule | None = None, n: int | None = None,
                  X0=None, breaks=None) -> Integral:
    """∫_{t1}^{t2} ∫_{ℝⁿ} f G dx dt.

    ``f`` is either a callable f(x, t) with x of shape (N, n), a constant, or
    any object exposing ``value(x, t)`` (fields, exact solutions), in which
    case the Euclidean norm |u| is integrated. ``breaks`` as in gauss_slab.
    """
    rule = rule or QuadratureRule()
    bounds = None
    if hasattr(f, "value"):
        field = f
        n = field.params.n
        bounds = getattr(field, "spatial_bounds", None)

        def integrand(x, t):
            return np.linalg.norm(field.value(x, t), axis=-1)
    elif callable(f):
        if n is None:
            raise DomainError("spatial dimension n is required for callables")
        integrand = f
    else:
        const = float(f)
        n = n or 1

        def integrand(x, t):
            return np.full(len(x), const)
    return gauss_slab(integrand, t1, t2, rule, n, X0, bounds, breaks)


def spatial_gauss_integral(integrand, t: float, rule: QuadratureRule, n: int, x0=None) -> Integral:
    """∫ F(x) G(x - x0, t) dx at a fixed t < 0 (z-substitution, same error model)."""
    if t >= 0:
        raise DomainError("fixed-time Gaussian integral needs t < 0")
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    sigma = math.sqrt(-4.0 * t)

    def one(panels):
        nodes_1d, weights_1d = [], []
        for _ in range(n):
            z, w = composite_nodes(-rule.similarity_cutoff, rule.similarity_cutoff, panels, split=0.0)
            nodes_1d.append(z)
            weights_1d.append(w * np.exp(-z * z))
        Z = np.stack(np.meshgrid(*nodes_1d, indexing="ij"), axis=-1).reshape(-1, n)
        W = weights_1d[0]
        for w in weights_1d[1:]:
            W = np.multiply.outer(W, w)
        vals = np.asarray(integrand(x0 + sigma * Z), dtype=float)
        return float(np.dot(W.ravel(), vals)) * math.pi ** (-n / 2), float(np.max(np.abs(vals)))

    fine, sup = one(rule.panels)
    coarse, _ = one(rule.coarsened().panels)
    return Integral(fine, abs(fine - coarse) + rule.tail_bound(n) * sup + 1e-15 * abs(fine))


def ball_gauss_nodes(n: int, t: float, radius: float = 1.0, R_cut: float = 8.0, nr: int = 48, nang: int = 96):
    """Nodes and weights for ∫_{B_radius} F(x) G(x, t) dx at fixed t < 0.

    Works in z = x/√(-4t) over the ball of radius min(R_cut, radius/√(-4t))
    with the Gaussian folded into the weights. n in {1, 2}.
    """
    sigma = math.sqrt(-4.0 * t)
    rho = min(R_cut, radius / sigma)
    if n == 1:
        z, w = composite_nodes(-rho, rho, max(2, nr // PANEL_ORDER), split=0.0)
        return sigma * z[:, None], w * np.exp(-z * z) / math.sqrt(math.pi)
    if n == 2:
        s, ws = composite_nodes(0.0, rho, max(2, nr // PANEL_ORDER))
        phi = 2 * np.pi * (np.arange(nang) + 0.5) / nang
        S, P = np.meshgrid(s, phi, indexing="ij")
        Z = np.stack([S * np.cos(P), S * np.sin(P)], axis=-1).reshape(-1, 2)
        W = (ws * s * np.exp(-s * s))[:, None] * np.full(nang, 2 * np.pi / nang)[None, :]
        return sigma * Z, W.ravel() / math.pi
    raise DomainError("ball quadrature is available for n in {1, 2}")




