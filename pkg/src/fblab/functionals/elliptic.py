"""Fixed-time local energy and the elliptic energy M on the unit ball."""
from __future__ import annotations

import numpy as np

from ..core import BallField, BallMesh, Params, ball_mesh
from ..errors import OutOfDomainError


def _exponent(q_or_params):
    if isinstance(q_or_params, Params):
        return q_or_params.q
    return float(q_or_params)


def elliptic_parts(v: BallField, q) -> dict:
    """Dirichlet, potential and boundary parts of M(v) on the P1 mesh."""
    q = _exponent(q)
    kappa = 2.0 / (1.0 - q)
    mesh = v.mesh
    V = v.values
    dirichlet = float(sum(V[:, c] @ (mesh.stiffness @ V[:, c]) for c in range(V.shape[1])))
    mag = np.linalg.norm(V, axis=1)
    potential = float(mesh.mass @ (2.0 / (1.0 + q) * mag ** (1.0 + q)))
    boundary = float(mesh.boundary_weights @ (mag[mesh.boundary] ** 2))
    return {"dirichlet": dirichlet, "potential": potential, "boundary": kappa * boundary}


def elliptic_M(v: BallField, q) -> float:
    """M(v) = ∫_{B₁}(|∇v|² + 2/(1+q)|v|^(1+q)) - κ∫_{∂B₁}|v|².

    ``q`` is the exponent or a Params instance. Gradients are exact for the P1
    interpolant; the potential uses lumped mass and the sphere term the
    boundary-node trace.
    """
    parts = elliptic_parts(v, q)
    return parts["dirichlet"] + parts["potential"] - parts["boundary"]


def rescaled_slice(u, r: float, x0, t0: float, mesh: BallMesh | None = None) -> BallField:
    """y ↦ u(x0 + r y, t0) / r^κ on the mesh of B₁."""
    p = u.params
    mesh = mesh or ball_mesh(p.n)
    x0 = np.asarray(x0, dtype=float).ravel()
    pts = x0 + r * mesh.nodes
    bounds = getattr(u, "spatial_bounds", None)
    if bounds is not None:
        for i, (lo, hi) in enumerate(bounds):
            if pts[:, i].min() < lo - 1e-9 or pts[:, i].max() > hi + 1e-9:
                raise OutOfDomainError(f"ball B_{r}({x0.tolist()}) leaves the sampled slice")
    vals = u.value(pts, t0) / r ** p.kappa
    return BallField(mesh, vals)


def local_weiss(u, r: float, x0, t0: float, mesh: BallMesh | None = None) -> float:
    """W_{t0}(u, r, x0); by scaling it equals M of the rescaled slice."""
    return elliptic_M(rescaled_slice(u, r, x0, t0, mesh), u.params)
