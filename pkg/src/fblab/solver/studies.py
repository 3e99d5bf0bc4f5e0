"""Convergence harness and the forward-uniqueness decay curve."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import EnergyCurve, SpaceTimeField, heat_residual
from ..errors import DomainError, ShapeError
from ..kernels.exact import exact_sample
from .cauchy import SolverConfig, solve_cauchy

ROUNDOFF = 1e-11


@dataclass(frozen=True)
class ConvergenceStudy:
    dx: np.ndarray
    dt: np.ndarray
    errors: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        return self.errors[:-1] / np.maximum(self.errors[1:], 1e-300)

    @property
    def constant(self) -> float:
        """Smallest C with error <= C (dx² + dt) at every level."""
        return float(np.max(self.errors / (self.dx ** 2 + self.dt)))

    def passes(self, factor: float = 1.7, floor: float = ROUNDOFF) -> bool:
        """Every refinement reduces the error by ``factor``, except where both
        levels already sit at round-off."""
        ok = True
        for e_coarse, e_fine in zip(self.errors[:-1], self.errors[1:]):
            if e_coarse <= floor and e_fine <= floor:
                continue
            ok &= e_coarse >= factor * e_fine
        return bool(ok)


def convergence_study(exact, time_box, space_box, cells: int = 32, levels: int = 4, dt_over_dx: float = 1.0,
                      scheme: str = "imex_euler") -> ConvergenceStudy:
    """Max-norm error of solve_cauchy against a closed form under joint
    halving of dx and dt (dt = dt_over_dx · dx), n = 1 or 2 on a cube."""
    p = exact.params
    dxs, dts, errs = [], [], []
    for level in range(levels):
        N = cells * 2 ** level
        dx = (space_box[1] - space_box[0]) / N
        steps = int(math.ceil((time_box[1] - time_box[0]) / (dt_over_dx * dx) - 1e-9))
        box = (tuple(time_box),) + (tuple(space_box),) * p.n
        shape = (steps + 1,) + (N + 1,) * p.n
        u = solve_cauchy(exact, SolverConfig(scheme=scheme, bc=exact), box, shape)
        ref = exact_sample(exact, box, shape)
        dxs.append(dx)
        dts.append((time_box[1] - time_box[0]) / steps)
        errs.append(float(np.max(np.abs(u.values - ref.values))))
    return ConvergenceStudy(np.array(dxs), np.array(dts), np.array(errs), {"kind": exact.kind, "q": p.q})


def _trapezoid_weights(axis):
    w = np.full(len(axis), axis[1] - axis[0])
    w[[0, -1]] *= 0.5
    return w


def uniqueness_decay_check(u: SpaceTimeField, v: SpaceTimeField, slab, x0=None) -> EnergyCurve:
    """φ(τ) = ∫_s^τ ∫ n/(4(t0 - t)) |u - v|² G(x - x0, t - t0) dx dt and the curve
    (t0 - τ)^(n/2) φ(τ) on the grid times τ in (s, t0).

    Space integrals use the trapezoid rule on the fields' grid, time integrals
    the cumulative trapezoid rule. ``values`` holds the weighted curve,
    ``info['phi']`` the raw φ, and the heat residuals of both inputs are
    reported in ``info``.
    """
    if u.shape != v.shape or u.box != v.box or u.params != v.params:
        raise ShapeError("fields must share grid, box and params")
    s, t0 = (float(a) for a in slab)
    times = u.times
    if not (times[0] - 1e-12 <= s < t0):
        raise DomainError("slab must satisfy box start <= s < t0")
    n = u.params.n
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    sel = np.flatnonzero((times >= s - 1e-12) & (times < t0 - 1e-12))
    if len(sel) < 2:
        raise DomainError("slab contains fewer than two time levels")
    spatial_axes = u.axes[1:]
    W = _trapezoid_weights(spatial_axes[0])
    for ax in spatial_axes[1:]:
        W = np.multiply.outer(W, _trapezoid_weights(ax))
    X = np.stack(np.meshgrid(*spatial_axes, indexing="ij"), axis=-1)
    r2 = np.sum((X - x0) ** 2, axis=-1)
    diff2 = np.sum((u.values - v.values) ** 2, axis=-1)
    density = np.empty(len(sel))
    for j, k in enumerate(sel):
        lag = t0 - times[k]
        G = (4 * math.pi * lag) ** (-n / 2) * np.exp(-r2 / (4 * lag))
        density[j] = n / (4 * lag) * float(np.sum(W * diff2[k] * G))
    tau = times[sel]
    phi = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(tau))])
    curve = (t0 - tau) ** (n / 2) * phi
    res_u = heat_residual(u)
    res_v = heat_residual(v)

    def worst(res):
        vals = np.linalg.norm(res.values, axis=-1)
        return float(np.max(vals[res.valid])) if res.valid is not None else float(np.max(vals))

    info = {"phi": phi, "residual_u": worst(res_u), "residual_v": worst(res_v)}
    return EnergyCurve(tau, curve, np.zeros(len(tau)), np.zeros(len(tau)), info)


def nonincrease_defect(curve: EnergyCurve) -> float:
    """Largest rise of the curve between consecutive times (0 if nonincreasing)."""
    if len(curve) < 2:
        return 0.0
    return float(max(0.0, np.max(np.diff(curve.values))))


def subsample_time(u: SpaceTimeField, factor: int) -> SpaceTimeField:
    """Every ``factor``-th time level of u (the time step grows by ``factor``)."""
    if (u.shape[0] - 1) % factor:
        raise ShapeError("time levels do not divide evenly")
    shape = ((u.shape[0] - 1) // factor + 1,) + tuple(u.shape[1:])
    return SpaceTimeField(u.params, u.box, shape, u.values[::factor])
