"""Balanced (Weiss) energy: global, cutoff-localized, and its r -> 0+ limit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from ..core import EnergyCurve, as_point, reaction
from ..errors import DomainError, OutOfDomainError
from ..kernels.quadrature import Integral, QuadratureRule, gauss_slab


def _check_slab(u, X0, t_lo):
    box = getattr(u, "box", None)
    if box is not None and X0.t + t_lo < box[0][0] - 1e-12:
        raise OutOfDomainError(f"slab start {X0.t + t_lo} precedes the field's first time {box[0][0]}")
    if box is not None and X0.t > box[0][1] + 1e-12:
        raise OutOfDomainError("recentering time lies after the field's last time")


def weiss(u, r: float, X0=None, rule: QuadratureRule | None = None) -> Integral:
    """𝕎(u, r; X0) = r^(-2κ) ∫_{-4r²}^{-r²} ∫ (|∇u|² + κ|u|²/(2t) + 2/(1+q)|u|^(1+q)) G dx dt,
    with u evaluated at (x0 + x, t0 + t)."""
    if r <= 0:
        raise DomainError("radius must be positive")
    rule = rule or QuadratureRule()
    p = u.params
    X0 = as_point(X0, p.n)
    _check_slab(u, X0, -4 * r * r)
    kappa, q = p.kappa, p.q
    t0 = X0.t

    def integrand(x, t):
        s = t - t0
        val = u.value(x, t)
        grad = u.gradient(x, t)
        mag2 = np.sum(val * val, axis=-1)
        return (np.sum(grad * grad, axis=(-2, -1)) + kappa * mag2 / (2 * s)
                + 2.0 / (1.0 + q) * mag2 ** ((1.0 + q) / 2))

    res = gauss_slab(integrand, -4 * r * r, -r * r, rule, p.n, X0, getattr(u, "spatial_bounds", None))
    scale = r ** (-2 * kappa)
    return Integral(res.value * scale, res.err * scale)


# ---------------------------------------------------------------------------
# cutoff localization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cutoff:
    """Radial cutoff: 1 on B_inner, 0 outside B_outer, quintic smoothstep between."""

    inner: float = 0.5
    outer: float = 0.75

    def _s(self, rho):
        return np.clip((rho - self.inner) / (self.outer - self.inner), 0.0, 1.0)

    def profile(self, rho):
        s = self._s(rho)
        return 1.0 - s ** 3 * (10 - 15 * s + 6 * s * s)

    def dprofile(self, rho):
        s = self._s(rho)
        return -30 * s * s * (1 - s) ** 2 / (self.outer - self.inner)

    def ddprofile(self, rho):
        s = self._s(rho)
        return -60 * s * (1 - s) * (1 - 2 * s) / (self.outer - self.inner) ** 2

    def value(self, y):
        return self.profile(np.linalg.norm(y, axis=-1))

    def gradient(self, y):
        rho = np.linalg.norm(y, axis=-1)
        safe = np.where(rho > 0, rho, 1.0)
        return (self.dprofile(rho) / safe)[..., None] * y

    def laplacian(self, y):
        n = y.shape[-1]
        rho = np.linalg.norm(y, axis=-1)
        safe = np.where(rho > 0, rho, 1.0)
        return self.ddprofile(rho) + (n - 1) * self.dprofile(rho) / safe

    def ring_measure(self, n: int) -> float:
        omega = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        return omega * (self.outer ** n - self.inner ** n)


@dataclass(frozen=True, eq=False)
class Localized:
    """η(x - x0)·u as an evaluable object."""

    u: object
    eta: Cutoff
    x0: np.ndarray

    @property
    def params(self):
        return self.u.params

    @property
    def spatial_bounds(self):
        return getattr(self.u, "spatial_bounds", None)

    @property
    def box(self):
        return getattr(self.u, "box", None)

    def value(self, x, t):
        return self.eta.value(np.asarray(x) - self.x0)[..., None] * self.u.value(x, t)

    def gradient(self, x, t):
        y = np.asarray(x) - self.x0
        return (self.eta.value(y)[..., None, None] * self.u.gradient(x, t)
                + np.einsum("...i,...m->...im", self.eta.gradient(y), self.u.value(x, t)))


def _ring_samples(n, eta, count=48):
    rho = np.linspace(eta.inner, eta.outer, count)
    if n == 1:
        return np.concatenate([rho, -rho])[:, None]
    if n == 2:
        phi = np.linspace(0, 2 * np.pi, 4 * count, endpoint=False)
        R, P = np.meshgrid(rho, phi, indexing="ij")
        return np.stack([R * np.cos(P), R * np.sin(P)], axis=-1).reshape(-1, 2)
    pts = np.random.default_rng(0).normal(size=(count ** 2, n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts * np.repeat(rho, count)[:, None]


def cutoff_constant(u, X0=None, eta: Cutoff | None = None, window: float = 1.0, time_samples: int = 48) -> float:
    """Constant C with |∂_r 𝕎(ηu, r) - (nonnegative part)| <= C r^(-n-2κ+1) e^{-1/(64r²)}.

    Bounds the ring integral ∫∫_{ring} Lv·(-Hv + f(v)) G by sup|Lv| · sup|-Hv + f(v)|
    · |ring| · 3r² · (4πr²)^(-n/2) e^{-1/(64r²)}, giving C = 6|ring|(4π)^(-n/2)·sups.
    The sups are sampled over the ring times (t0 - window, t0), clipped to the
    field's box; u is assumed to solve the system there (Hu = f(u)).
    """
    eta = eta or Cutoff()
    p = u.params
    X0 = as_point(X0, p.n)
    x0 = X0.as_array()
    box = getattr(u, "box", None)
    t_lo = X0.t - window
    if box is not None:
        t_lo = max(t_lo, box[0][0])
    times = np.linspace(t_lo, X0.t, time_samples)
    Y = _ring_samples(p.n, eta)
    sup_L = 0.0
    sup_H = 0.0
    for t in times:
        X = x0 + Y
        val = u.value(X, t)
        grad = u.gradient(X, t)
        dt = u.time_derivative(X, t)
        s = t - X0.t
        Lu = np.einsum("...i,...im->...m", Y, grad) + 2 * s * dt - p.kappa * val
        ev = eta.value(Y)
        deta = eta.gradient(Y)
        Lv = np.sum(Y * deta, axis=-1)[:, None] * val + ev[:, None] * Lu
        cross = np.einsum("...im,...i->...m", grad, deta)
        Hv_minus_f = (eta.laplacian(Y)[:, None] * val + 2 * cross + ev[:, None] * reaction(val, p.q)
                      - reaction(ev[:, None] * val, p.q))
        sup_L = max(sup_L, float(np.max(np.linalg.norm(Lv, axis=-1))))
        sup_H = max(sup_H, float(np.max(np.linalg.norm(Hv_minus_f, axis=-1))))
    return 6.0 * eta.ring_measure(p.n) * (4 * math.pi) ** (-p.n / 2) * sup_L * sup_H


def cutoff_F(r, C: float, n: int, kappa: float):
    """F(r) = C ∫_0^r τ^(-n-2κ+1) e^{-1/(64τ²)} dτ in closed form.

    With u = 1/(8τ) the integral is 8^(n+2κ-2) · ½ Γ(s, 1/(64r²)), s = (n+2κ-2)/2.
    """
    r = np.asarray(r, dtype=float)
    s = (n + 2 * kappa - 2) / 2
    return C * 8.0 ** (n + 2 * kappa - 2) * 0.5 * gamma_fn(s) * gammaincc(s, 1.0 / (64 * r * r))


def weiss_localized(u, r: float, X0=None, eta: Cutoff | None = None, rule: QuadratureRule | None = None,
                    C_F: float | None = None) -> tuple:
    """Returns (𝕎(ηu, r; X0), error, F(r))."""
    eta = eta or Cutoff()
    p = u.params
    X0 = as_point(X0, p.n)
    if C_F is None:
        C_F = cutoff_constant(u, X0, eta)
    val = weiss(Localized(u, eta, X0.as_array()), r, X0, rule)
    return val.value, val.err, float(cutoff_F(r, C_F, p.n, p.kappa))


def weiss_curve(u, radii, X0=None, rule: QuadratureRule | None = None, eta: Cutoff | None = None,
                executor=None) -> EnergyCurve:
    """𝕎 (or 𝕎(ηu) + F when a cutoff is given) over increasing radii."""
    p = u.params
    X0 = as_point(X0, p.n)
    radii = np.sort(np.asarray(radii, dtype=float))
    if eta is not None:
        C_F = cutoff_constant(u, X0, eta)
        target = Localized(u, eta, X0.as_array())
    else:
        C_F = 0.0
        target = u
    mapper = executor.map if executor is not None else map
    results = list(mapper(lambda r: weiss(target, r, X0, rule), radii))
    values = np.array([res.value for res in results])
    errors = np.array([res.err for res in results])
    corrections = cutoff_F(radii, C_F, p.n, p.kappa) if eta is not None else np.zeros(len(radii))
    return EnergyCurve(radii, values, corrections, errors, {"C_F": C_F, "localized": eta is not None})


@dataclass(frozen=True)
class WeissLimit:
    limit: float
    band: float
    consistent: bool
    curve: EnergyCurve = field(repr=False)
    spread: float = 0.0

    def __iter__(self):
        yield self.limit
        yield self.band


def _geometric_extrapolate(r3, v3):
    """Limit of V0 + a r^p from three values at geometric radii (ascending)."""
    d1 = v3[1] - v3[0]
    d2 = v3[2] - v3[1]
    scale = max(1.0, abs(v3[0]))
    if abs(d1) <= 1e-13 * scale or abs(d2) <= 1e-13 * scale:
        return v3[0]
    rho = d1 / d2
    if not (0.0 < rho < 1.0):
        return v3[0]
    return v3[0] - d1 * rho / (1.0 - rho)


def weiss_limit(u, X0=None, radii=None, rule: QuadratureRule | None = None, eta: Cutoff | None = None,
                curve: EnergyCurve | None = None, executor=None) -> WeissLimit:
    """Extrapolate 𝕎(u, 0+; X0) from 𝕎 + F at >= 4 geometric radii.

    The estimate removes a fitted power-law tail from the smallest-radius value
    using the three smallest radii; the band is the spread between that and the
    extrapolant from the next three radii plus the largest quadrature error.
    """
    if curve is None:
        if radii is None or len(radii) < 4:
            raise DomainError("at least four radii are required")
        curve = weiss_curve(u, radii, X0, rule, eta, executor)
    r = curve.radii
    if len(r) < 4:
        raise DomainError("at least four radii are required")
    ratios = r[1:] / r[:-1]
    if np.ptp(ratios) > 1e-6 * ratios.mean():
        raise DomainError("radii must form a geometric sequence")
    totals = curve.totals
    first = _geometric_extrapolate(r[:3], totals[:3])
    second = _geometric_extrapolate(r[1:4], totals[1:4])
    spread = abs(first - second)
    quad = float(np.max(curve.errors[:4]))
    tol = 3 * float(np.max(curve.errors)) + 1e-12 * max(1.0, float(np.max(np.abs(totals))))
    consistent = curve.monotonicity_defect() <= tol
    return WeissLimit(float(first), spread + quad, bool(consistent), curve, spread)
