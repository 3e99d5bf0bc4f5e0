"""Positivity-slab check and pointwise subcaloricity / Cauchy-Schwarz diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..core import SpaceTimeField, _target_grid, as_point
from ..errors import ContractError
from ..functionals.halfspace import _slab_samples
from .sampling import _ball_offsets, default_threshold


@dataclass(frozen=True)
class SlabCheck:
    holds: bool
    measured_offset: float
    bound: float
    closeness: float
    closeness_ok: bool

    def __iter__(self):
        yield self.holds
        yield self.measured_offset


class _Shifted:
    def __init__(self, u, X0):
        self.u, self.params = u, u.params
        self.x0, self.t0 = X0.as_array(), X0.t

    def value(self, x, t):
        return self.u.value(self.x0 + np.asarray(x), self.t0 + np.asarray(t))


def support_slab_check(u, eps: float, X0=None, C: float = 10.0, threshold: float | None = None,
                       e=None) -> SlabCheck:
    """Does {|u| > threshold} ∩ Q⁻_{1/2}(X0) lie in {x_n > -C eps^β}, β = 1/(n+4)?

    The Gaussian L¹ distance ∫∫_{Q₁⁻}|u - α(x_n)₊^κ e|G is computed first and
    reported as ``closeness`` (``closeness_ok`` = closeness < eps). The unit
    vector e defaults to the best one in closed form.
    """
    p = u.params
    n = p.n
    X0 = as_point(X0 if X0 is not None else (np.zeros(n), 0.0), n)
    S = _slab_samples(_Shifted(u, X0), n)
    prof = p.alpha * np.maximum(S.points[:, -1], 0.0) ** p.kappa
    if e is None:
        inner = (S.weights * prof) @ S.values
        e = inner / np.linalg.norm(inner) if np.linalg.norm(inner) > 0 else np.eye(p.m)[0]
    e = np.asarray(e, dtype=float)
    closeness = float(S.weights @ np.linalg.norm(S.values - prof[:, None] * e, axis=1))

    thr = default_threshold(u) if threshold is None else threshold
    x0 = X0.as_array()
    if isinstance(u, SpaceTimeField):
        T, X = u.mesh()
        sel = ((T >= X0.t - 0.25 - 1e-12) & (T <= X0.t + 1e-12)
               & (np.linalg.norm(X - x0, axis=-1) <= 0.5 + 1e-12))
        pos = sel & (u.norm() > thr)
        heights = X[pos][:, -1] - x0[-1]
    else:
        offs = _ball_offsets(n, 0.5)
        heights = []
        for t in np.linspace(X0.t - 0.25, X0.t, 21):
            mag = np.linalg.norm(u.value(x0 + offs, t), axis=-1)
            heights.append(offs[mag > thr, -1])
        heights = np.concatenate(heights)
    offset = float(max(0.0, -np.min(heights))) if heights.size else 0.0
    bound = C * eps ** (1.0 / (n + 4)) if eps > 0 else 0.0
    holds = bool(heights.size == 0 or np.min(heights) > -bound)
    return SlabCheck(holds, offset, bound, closeness, closeness < eps)


@dataclass(frozen=True)
class PointwiseReport:
    """``min_H`` is min of the discrete H(g^exponent) over nodes whose whole
    stencil lies in the region. ``cs_eps`` is the smallest ε with
    |u|²|∇u|² ≤ (1+ε)|Σ_k u^k∇u^k|² on the region. Collar arrays are indexed by
    the collar widths (distance to the zero set at the same time)."""

    min_H: float
    exponent: float
    cs_eps: float
    g_max: float
    collar_widths: np.ndarray
    collar_max_g: np.ndarray
    collar_eps: np.ndarray
    collars_monotone: bool | None
    nodes: int
    info: dict = field(default_factory=dict, repr=False)


def _as_field(u, grid):
    if isinstance(u, SpaceTimeField):
        return u
    if grid is None:
        raise ValueError("closed-form inputs need grid=(box, shape)")
    box, shape = grid
    T, X = _target_grid(box, shape)
    return SpaceTimeField(u.params, box, shape, u.value(X, T))


def subcaloric_exponent(q: float) -> float:
    """1 for q = 0; otherwise the smallest θ >= 2 with 2θ > 1/(1-q), plus a margin."""
    if q == 0:
        return 1.0
    return max(2.0, 1.0 / (2.0 * (1.0 - q)) + 0.01)


def pointwise_diagnostics(u, region=None, grid=None, collar_width: float | None = None, collars: int = 3,
                          threshold: float | None = None) -> PointwiseReport:
    """g = |∂ₜu|²|u|^(-2q) on a region of the positivity set.

    ``region`` is a boolean mask over the field grid (default: all nodes with
    |u| > threshold). Closed forms are first sampled on ``grid`` = (box, shape).
    Collars are the nodes at spatial distance <= w, 2w, 4w, ... from the zero
    set (w defaults to 2 dx); the flag says whether the maximum of g grows
    with the collar width, i.e. decreases toward the free boundary.
    """
    f = _as_field(u, grid)
    p = f.params
    thr = default_threshold(f) if threshold is None else threshold
    mag = f.norm()
    positive = mag > thr
    region = positive.copy() if region is None else np.asarray(region, dtype=bool)
    if region.shape != f.shape:
        raise ValueError(f"region mask has shape {region.shape}, expected {f.shape}")
    if np.any(region & ~positive):
        raise ContractError("region touches the zero set")
    q = p.q
    dt2 = np.sum(f.dt_values ** 2, axis=-1)
    g = np.zeros_like(mag)
    g[positive] = dt2[positive] * mag[positive] ** (-2 * q)
    theta = subcaloric_exponent(q)
    G = SpaceTimeField(p.with_dims(m=1), f.box, f.shape, (g ** theta)[..., None])
    Hg = (G.laplacian_values - G.dt_values)[..., 0]
    core = ndimage.binary_erosion(region, structure=ndimage.generate_binary_structure(region.ndim, 1),
                                  border_value=0)
    min_H = float(np.min(Hg[core])) if np.any(core) else math.nan

    grad = f.grad_values
    lhs = mag ** 2 * np.sum(grad ** 2, axis=(-2, -1))
    proj = np.einsum("...im,...m->...i", grad, f.values)
    rhs = np.sum(proj ** 2, axis=-1)
    scale = np.maximum(lhs, 1e-300)
    ratio = np.where(rhs > 1e-14 * scale, lhs / np.maximum(rhs, 1e-300) - 1.0,
                     np.where(lhs > 1e-28, math.inf, 0.0))
    ratio = np.where(ratio > 1e-12, ratio, 0.0)
    cs_eps = float(np.max(ratio[region])) if np.any(region) else 0.0

    spacing = f.spacing[1:]
    dist = np.full(f.shape, math.inf)
    for k in range(f.shape[0]):
        if np.any(~positive[k]):
            dist[k] = ndimage.distance_transform_edt(positive[k], sampling=spacing)
    w = 2 * f.dx if collar_width is None else collar_width
    widths = w * 2.0 ** np.arange(collars)
    cmax, ceps = [], []
    for wd in widths:
        sel = region & (dist <= wd + 1e-12)
        cmax.append(float(np.max(g[sel])) if np.any(sel) else math.nan)
        ceps.append(float(np.max(ratio[sel])) if np.any(sel) else math.nan)
    cmax = np.array(cmax)
    monotone = None if np.any(np.isnan(cmax)) else bool(np.all(np.diff(cmax) >= 0))
    return PointwiseReport(min_H, theta, cs_eps, float(np.max(g[region])) if np.any(region) else 0.0,
                           widths, cmax, np.array(ceps), monotone, int(region.sum()),
                           {"stencil_nodes": int(core.sum()), "threshold": thr})
