"""Achieved energy improvement of the elliptic minimizer over the homogeneous extension."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import BallField, BallMesh, Params, ball_mesh, homogeneous_extension
from ..functionals.elliptic import elliptic_M, elliptic_parts
from ..solver.elliptic import DescentConfig, EllipticResult, minimize_elliptic


@dataclass(frozen=True)
class EpiperimetricResult:
    """eps_achieved is None in the degenerate case |M(c) - M(h)| <= noise."""

    M_c: float
    M_v: float
    eps_achieved: float | None
    M_h: float
    closeness: float
    closeness_ok: bool
    relative_improvement: float | None
    minimizer: EllipticResult = field(repr=False, default=None)
    info: dict = field(default_factory=dict, repr=False)

    @property
    def degenerate(self) -> bool:
        return self.eps_achieved is None

    def __iter__(self):
        yield self.M_c
        yield self.M_v
        yield self.eps_achieved


def _halfspace_on(mesh: BallMesh, params: Params, nu, e) -> BallField:
    prof = params.alpha * np.maximum(mesh.nodes @ np.asarray(nu, dtype=float), 0.0) ** params.kappa
    return BallField(mesh, prof[:, None] * np.asarray(e, dtype=float)[None, :])


def _w12_plus_sup(mesh: BallMesh, diff: np.ndarray) -> float:
    h1 = sum(float(diff[:, c] @ (mesh.stiffness @ diff[:, c])) for c in range(diff.shape[1]))
    l2 = float(mesh.mass @ np.sum(diff ** 2, axis=1))
    return math.sqrt(max(0.0, h1) + l2) + float(np.max(np.linalg.norm(diff, axis=1)))


def epiperimetric_test(c_boundary, fit, params: Params, mesh: BallMesh | None = None,
                       config: DescentConfig | None = None, delta: float = 0.5,
                       noise: float | None = None) -> EpiperimetricResult:
    """Compare M of the κ-homogeneous extension c of a trace with M of the
    minimizer v sharing that trace, relative to the half-space h of ``fit``.

    With gap = M(c) - M(h) and drop = M(v) - M(h):
    gap > noise gives eps = 1 - drop/gap; gap < -noise gives eps = 1 when
    drop <= 0 (v is at least as good as h, the inequality holds for every
    eps <= 1) and -inf otherwise; |gap| <= noise is degenerate (None).
    M(h) is evaluated on the same mesh, so the comparison shares one
    discretization. ``noise`` defaults to 1e-9 times the Dirichlet plus
    potential energy of h. ``closeness`` is ‖c-h‖_{W^{1,2}} + ‖c-h‖_∞ against ``delta``.
    """
    mesh = mesh or ball_mesh(params.n)
    c = homogeneous_extension(c_boundary, mesh, params.kappa)
    h = _halfspace_on(mesh, params, fit.nu, fit.e)
    M_c = elliptic_M(c, params)
    M_h = elliptic_M(h, params)
    closeness = _w12_plus_sup(mesh, c.values - h.values)
    res = minimize_elliptic(c.trace, params, config=config, mesh=mesh, initial=c)
    M_v = elliptic_M(res.field, params)
    if noise is None:
        parts = elliptic_parts(h, params)
        noise = 1e-9 * max(parts["dirichlet"] + parts["potential"], 1e-300)
    gap, drop = M_c - M_h, M_v - M_h
    if gap > noise:
        eps = 1.0 - drop / gap
    elif gap < -noise:
        eps = 1.0 if drop <= noise else -math.inf
    else:
        eps = None
    rel = None if abs(gap) <= noise else (M_c - M_v) / abs(gap)
    return EpiperimetricResult(M_c, M_v, eps, M_h, closeness, closeness <= delta, rel, res,
                               {"gap": gap, "drop": drop, "noise": noise, "converged": res.converged})
