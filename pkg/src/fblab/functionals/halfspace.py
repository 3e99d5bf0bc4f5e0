"""Distance from a profile to the half-space solution class."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ..core import BallField, Params
from ..errors import DomainError
from ..kernels.quadrature import ball_gauss_nodes, composite_nodes

NORM_KINDS = ("gauss_L2_slab", "ball_L2")


@dataclass(frozen=True)
class HalfspaceFit:
    nu: np.ndarray
    e: np.ndarray
    distance: float
    norm_kind: str
    reference_norm: float = 1.0
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("nu", "e"):
            vec = np.array(getattr(self, name), dtype=float)
            vec = vec / np.linalg.norm(vec)
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)
        if self.distance < 0:
            raise DomainError("distance must be nonnegative")

    @property
    def relative_distance(self) -> float:
        """distance / ‖α(x·ν)₊^κ‖ in the same norm."""
        return self.distance / self.reference_norm if self.reference_norm > 0 else math.inf


@dataclass
class _Sampled:
    """Points, weights and values of the profile under the chosen norm."""

    points: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    mesh: object = None


def _slab_samples(v, n, time_panels=10):
    # geometric time panels accumulating at t = 0 where the weight concentrates
    edges = [-1.0]
    while len(edges) < time_panels:
        edges.append(edges[-1] / 2)
    edges.append(0.0)
    pts, wts, vals = [], [], []
    for a, b in zip(edges[:-1], edges[1:]):
        tn, tw = composite_nodes(a, b, 1)
        for t, w in zip(tn, tw):
            x, wx = ball_gauss_nodes(n, t, radius=1.0)
            pts.append(x)
            wts.append(w * wx)
            vals.append(np.asarray(v.value(x, t), dtype=float))
    return _Sampled(np.concatenate(pts), np.concatenate(wts), np.concatenate(vals))


def _profile(params, nu, points):
    return params.alpha * np.maximum(points @ nu, 0.0) ** params.kappa


def _direction(n, angle):
    if n == 1:
        return np.array([1.0 if angle >= 0 else -1.0])
    return np.array([math.cos(angle), math.sin(angle)])


def dist_to_H(v, params: Params | None = None, norm_kind: str | None = None, grid: int = 72,
              tol: float = 1e-10) -> HalfspaceFit:
    """Minimize ‖v - α(x·ν)₊^κ e‖ over unit ν and unit e.

    For fixed ν the best e is ⟨v, h_ν⟩/|⟨v, h_ν⟩| in closed form, so only ν
    is searched: a coarse grid of ``grid`` directions, then golden-section
    refinement around the best grid angle (n = 2). BallField inputs use the
    lumped L²(B₁) norm; space-time inputs use the Gaussian-weighted L² norm on
    B₁ × (-1, 0). The H¹-seminorm part of the distance on a ball is reported
    in ``info``.
    """
    ball = isinstance(v, BallField)
    if params is None:
        if ball:
            raise DomainError("params are required for ball fields")
        params = v.params
    n = params.n
    if n > 2:
        raise DomainError("half-space fitting is available for n in {1, 2}")
    kind = norm_kind or ("ball_L2" if ball else "gauss_L2_slab")
    if kind not in NORM_KINDS or (kind == "ball_L2") != ball:
        raise DomainError(f"norm {kind!r} does not fit a {'ball' if ball else 'space-time'} profile")
    if ball:
        S = _Sampled(v.mesh.nodes, v.mesh.mass, v.values, v.mesh)
    else:
        S = _slab_samples(v, n)
    vv = float(S.weights @ np.sum(S.values ** 2, axis=1))

    def parts(angle):
        h = _profile(params, _direction(n, angle), S.points)
        inner = (S.weights * h) @ S.values
        hh = float(S.weights @ (h * h))
        return inner, hh

    def objective(angle):
        inner, hh = parts(angle)
        return vv - 2 * float(np.linalg.norm(inner)) + hh

    if n == 1:
        angles = np.array([0.0, -math.pi])
        scores = np.array([objective(a) for a in angles])
        best = float(angles[np.argmin(scores)])
        step = math.pi
    else:
        angles = 2 * math.pi * np.arange(grid) / grid
        scores = np.array([objective(a) for a in angles])
        k = int(np.argmin(scores))
        step = 2 * math.pi / grid
        res = minimize_scalar(objective, bracket=(angles[k] - step, angles[k], angles[k] + step), method="golden",
                              tol=tol)
        best = float(res.x) if res.fun <= scores[k] else float(angles[k])
        best = math.remainder(best, 2 * math.pi)
    nu = _direction(n, best)
    inner, hh = parts(best)
    norm_inner = float(np.linalg.norm(inner))
    if norm_inner > 0:
        e = inner / norm_inner
    else:
        e = np.zeros(params.m)
        e[0] = 1.0
    dist2 = max(0.0, vv - 2 * norm_inner + hh)
    info = {"grid": grid if n == 2 else 2, "angle_step": step, "refinement_tol": tol}
    if ball:
        mesh = S.mesh
        diff = S.values - _profile(params, nu, S.points)[:, None] * e
        info["gradient_distance"] = math.sqrt(max(0.0, sum(
            float(diff[:, c] @ (mesh.stiffness @ diff[:, c])) for c in range(diff.shape[1]))))
    return HalfspaceFit(nu, e, math.sqrt(dist2), kind, math.sqrt(hh), info)
