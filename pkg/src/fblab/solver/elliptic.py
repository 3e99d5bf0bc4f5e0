"""Minimizer of J(v) = ∫|∇v|² + 2/(1+q)|v|^(1+q) + 2v·g on B₁ with fixed trace."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import BallField, BallMesh, Params, ball_mesh, homogeneous_extension
from ..errors import DomainError


@dataclass(frozen=True)
class DescentConfig:
    """``tol`` bounds the relative energy decrease per iteration at
    termination; ``stationarity_tol`` bounds the Jacobi-scaled
    gradient-mapping residual relative to sqrt(|energy|)."""

    tol: float = 1e-13
    stationarity_tol: float = 1e-5
    max_iters: int = 50000
    check_every: int = 25


@dataclass(frozen=True, eq=False)
class EllipticResult:
    field: BallField
    energy: float
    converged: bool
    iterations: int
    history: np.ndarray = field(repr=False)

    @property
    def values(self):
        return self.field.values


def _prox_power(z, weight, q, newton_iters=40):
    """Nodewise argmin_s ½|s - z|² + weight·|s|^(1+q) for vectors z (N, m)."""
    mag = np.linalg.norm(z, axis=1)
    if q == 0:
        scale = np.where(mag > 0, np.maximum(0.0, 1.0 - weight / np.where(mag > 0, mag, 1.0)), 0.0)
        return z * scale[:, None]
    # radial magnitude s solves s + c s^q = |z| with c = weight(1+q)
    c = weight * (1 + q)
    lo = np.zeros_like(mag)
    hi = mag.copy()
    s = mag / (1.0 + c * np.maximum(mag, 1e-300) ** (q - 1))
    for _ in range(newton_iters):
        phi = s + c * s ** q - mag
        hi = np.where(phi > 0, s, hi)
        lo = np.where(phi <= 0, s, lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = s - phi / (1.0 + c * q * s ** (q - 1))
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        s_new = np.where(bad, 0.5 * (lo + hi), step)
        if np.all(np.abs(s_new - s) <= 1e-15 * np.maximum(mag, 1e-300)):
            s = s_new
            break
        s = s_new
    scale = np.where(mag > 0, s / np.where(mag > 0, mag, 1.0), 0.0)
    return z * scale[:, None]


def _trace_values(boundary, mesh: BallMesh, m):
    if callable(boundary):
        x = mesh.nodes[mesh.boundary]
        vals = np.asarray(boundary(x / np.linalg.norm(x, axis=1, keepdims=True)), dtype=float)
    else:
        vals = np.asarray(boundary, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.shape[0] != len(mesh.boundary):
        raise DomainError("boundary trace must have one value per boundary node")
    if m is not None and vals.shape[1] != m:
        raise DomainError("boundary trace has the wrong number of components")
    if not np.all(np.isfinite(vals)):
        raise DomainError("boundary trace must be finite")
    return vals


def minimize_elliptic(boundary, params: Params, source=None, config: DescentConfig | None = None,
                      mesh: BallMesh | None = None, initial: BallField | None = None) -> EllipticResult:
    """Accelerated proximal gradient descent with monotone restarts.

    The smooth part vᵀKv + 2 v·M g is handled by gradient steps in the metric
    diag(K) (Jacobi scaling, which neutralizes the graded polar mesh); the
    nonsmooth |v|^(1+q) term by its exact nodewise proximal map; the step is
    found by backtracking on the sufficient-decrease condition. Iterates are
    kept monotone: the recorded energy never increases. Starts from the
    κ-homogeneous extension of the trace unless ``initial`` is given.
    """
    config = config or DescentConfig()
    mesh = mesh or ball_mesh(params.n)
    q = params.q
    trace = _trace_values(boundary, mesh, None)
    m = trace.shape[1]
    K = mesh.stiffness.tocsr()
    mass = mesh.mass
    inner = mesh.interior
    Kii = K[inner][:, inner]
    Kib = K[inner][:, mesh.boundary]
    d = Kii.diagonal()
    a = mass[inner] * 2.0 / (1.0 + q)
    g = np.zeros((len(inner), m)) if source is None else np.asarray(
        source.values if isinstance(source, BallField) else source, dtype=float).reshape(mesh.size, m)[inner]
    lin = 2 * (Kib @ trace) + 2 * mass[inner][:, None] * g
    const = float(np.sum(trace * (K[mesh.boundary][:, mesh.boundary] @ trace)))
    const += float(mass[mesh.boundary] @ (2.0 / (1.0 + q) * np.linalg.norm(trace, axis=1) ** (1 + q)))
    if source is not None:
        gfull = np.asarray(source.values if isinstance(source, BallField) else source,
                           dtype=float).reshape(mesh.size, m)
        const += 2 * float(np.sum(mass[mesh.boundary][:, None] * trace * gfull[mesh.boundary]))

    def smooth(V):
        return float(np.sum(V * (Kii @ V))) + float(np.sum(lin * V))

    def grad(V):
        return 2 * (Kii @ V) + lin

    def nonsmooth(V):
        return float(a @ np.linalg.norm(V, axis=1) ** (1 + q))

    def energy(V):
        return smooth(V) + nonsmooth(V) + const

    if initial is not None:
        V = np.array(initial.values[inner], dtype=float)
    else:
        V = np.array(homogeneous_extension(trace, mesh, params.kappa).values[inner], dtype=float)
    Dinv = 1.0 / d
    tau = 0.5
    Y = V.copy()
    tk = 1.0
    E = energy(V)
    history = [E]
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        gY = grad(Y)
        sY = smooth(Y)
        while True:
            Z = Y - tau * Dinv[:, None] * gY
            W = _prox_power(Z, tau * Dinv * a, q)
            diff = W - Y
            quad = sY + float(np.sum(gY * diff)) + float(np.sum(d[:, None] * diff * diff)) / (2 * tau)
            if smooth(W) <= quad + 1e-14 * max(1.0, abs(sY)):
                break
            tau *= 0.5
        EW = energy(W)
        t_next = 0.5 * (1 + np.sqrt(1 + 4 * tk * tk))
        if EW <= E:
            Y = W + ((tk - 1) / t_next) * (W - V)
            decrease = E - EW
            V, E = W, EW
            tk = t_next
        else:
            # restart the momentum from the last accepted iterate
            Y = V.copy()
            tk = 1.0
            decrease = 0.0
        history.append(E)
        tau = min(tau * 1.1, 0.5)
        if it % config.check_every == 0 and decrease <= config.tol * max(1.0, abs(E)):
            # stationarity through the gradient mapping at the accepted iterate
            gV = grad(V)
            step = 0.25
            P = _prox_power(V - step * Dinv[:, None] * gV, step * Dinv * a, q)
            resid = float(np.sqrt(np.sum(d[:, None] * (P - V) ** 2))) / step
            if resid <= config.stationarity_tol * max(1.0, np.sqrt(abs(E))):
                converged = True
                break
    full = np.empty((mesh.size, m))
    full[inner] = V
    full[mesh.boundary] = trace
    return EllipticResult(BallField(mesh, full), E, converged, it, np.array(history))
