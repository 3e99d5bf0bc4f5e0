"""Time stepping for Δu - ∂ₜu = f(u) on a box with Dirichlet data."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import bsr_matrix, diags, identity, kron
from scipy.sparse.linalg import splu, spsolve

from ..core import Params, SpaceTimeField, _grid_axes
from ..errors import ConvergenceError, DomainError, SolverError

SCHEMES = ("imex_euler", "explicit", "implicit_euler")


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping options.

    ``dt`` may be left as None; it is then derived from the box and shape.
    ``reaction_floor`` None means dx^κ for q > 0 and 0 for q = 0.
    ``bc`` is an object with value(x, t), a callable (x, t) -> values, or None
    for homogeneous data. ``max_newton_iters`` caps the refinement sweeps of
    the linear solve (imex_euler) or the semismooth Newton iterations
    (implicit_euler).
    """

    dt: float | None = None
    scheme: str = "imex_euler"
    reaction_floor: float | None = None
    max_newton_iters: int = 25
    linear_tol: float = 1e-12
    bc: object = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.dt is not None and not self.dt > 0:
            raise DomainError("dt must be positive")
        if self.reaction_floor is not None and self.reaction_floor < 0:
            raise DomainError("reaction_floor must be nonnegative")
        if self.max_newton_iters < 1 or not self.linear_tol > 0:
            raise DomainError("need max_newton_iters >= 1 and linear_tol > 0")


def _evaluate(source, x, t, m):
    if source is None:
        return np.zeros(x.shape[:-1] + (m,))
    if hasattr(source, "value"):
        out = source.value(x, t)
    else:
        out = source(x, t)
    out = np.asarray(out, dtype=float)
    if out.ndim == x.ndim - 1:
        out = out[..., None]
    return np.broadcast_to(out, x.shape[:-1] + (m,))


def _laplacian_1d(N, h):
    return diags([np.ones(N - 1), -2 * np.ones(N), np.ones(N - 1)], [-1, 0, 1]) / (h * h)


def _interior_laplacian(inner_shape, spacing):
    """Dirichlet 5-point Laplacian on the interior nodes (Kronecker sum)."""
    dims = len(inner_shape)
    A = None
    for k in range(dims):
        parts = [identity(inner_shape[j], format="csr") for j in range(dims)]
        parts[k] = _laplacian_1d(inner_shape[k], spacing[k])
        term = parts[0]
        for p in parts[1:]:
            term = kron(term, p, format="csr")
        A = term if A is None else A + term
    return A.tocsc()


def _full_laplacian(U, spacing):
    """Centered Laplacian at interior nodes of a full spatial array (..., m)."""
    n = U.ndim - 1
    inner = tuple(slice(1, -1) for _ in range(n))
    out = np.zeros(tuple(s - 2 for s in U.shape[:-1]) + U.shape[-1:])
    for k in range(n):
        lo = list(inner)
        hi = list(inner)
        lo[k] = slice(0, -2)
        hi[k] = slice(2, None)
        out += (U[tuple(lo)] - 2 * U[inner] + U[tuple(hi)]) / spacing[k] ** 2
    return out


def _limited_reaction(U, dt, q, floor):
    """u·max(0, 1 - dt·max(|u|, δ)^(q-1)): one explicit reaction step that
    stops at zero instead of overshooting through it."""
    mag = np.linalg.norm(U, axis=-1, keepdims=True)
    safe = np.maximum(mag, floor) if floor > 0 else mag
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(mag > 0, np.maximum(0.0, 1.0 - dt * safe ** (q - 1.0)), 0.0)
    return U * factor


def _reaction_prox(Z, dt, q, floor):
    """Nodewise solution u of u + dt·f_δ(u) = z and its Jacobian blocks du/dz.

    f_δ(u) = u·max(|u|, δ)^(q-1) is the gradient of a convex radial potential,
    so the map is a proximal map: radial magnitude s solves s + dt·s·max(s, δ)^(q-1) = |z|.
    """
    r = np.linalg.norm(Z, axis=-1)
    if q == 0 and floor == 0:
        s = np.maximum(r - dt, 0.0)
        ds = (r > dt).astype(float)
    else:
        d = floor
        knee = d + dt * d ** q if d > 0 else 0.0
        lin = r <= knee
        s = np.empty_like(r)
        ds = np.empty_like(r)
        if d > 0:
            s[lin] = r[lin] / (1.0 + dt * d ** (q - 1.0))
            ds[lin] = 1.0 / (1.0 + dt * d ** (q - 1.0))
        big = ~lin
        rb = r[big]
        if rb.size:
            if q == 0:
                sb = rb - dt
            else:
                # s + dt s^q = r: safeguarded Newton inside [lo, hi]
                lo = np.full_like(rb, d)
                hi = rb.copy()
                sb = np.maximum(rb - dt * rb ** q, 0.5 * (lo + hi))
                sb = np.clip(sb, lo, hi)
                for _ in range(60):
                    phi = sb + dt * sb ** q - rb
                    hi = np.where(phi > 0, sb, hi)
                    lo = np.where(phi <= 0, sb, lo)
                    step = sb - phi / (1.0 + dt * q * sb ** (q - 1.0))
                    nxt = np.where((step > lo) & (step < hi), step, 0.5 * (lo + hi))
                    done = np.all(np.abs(nxt - sb) <= 1e-15 * rb)
                    sb = nxt
                    if done:
                        break
            s[big] = sb
            ds[big] = 1.0 / (1.0 + dt * q * sb ** (q - 1.0)) if q > 0 else 1.0
    safe = np.where(r > 0, r, 1.0)
    unit = Z / safe[..., None]
    ratio = np.where(r > 0, s / safe, 0.0)
    U = Z * ratio[..., None]
    m = Z.shape[-1]
    outer = np.einsum("...i,...j->...ij", unit, unit)
    J = ds[..., None, None] * outer + ratio[..., None, None] * (np.eye(m) - outer)
    return U, J


def _implicit_step(U, star_boundary, inner, boundary, spacing, Lint, dt, q, floor, tol, max_iters, step_index):
    """Solve u - dtΔu + dt f_δ(u) = u_old on the interior by semismooth Newton
    on G(u) = u - P(u_old + dtΔu), P the reaction proximal map."""
    m = U.shape[-1]
    inner_shape = U[inner].shape[:-1]
    N = int(np.prod(inner_shape))
    frame = U.copy()
    frame[boundary] = star_boundary
    bterm = dt * _full_laplacian(_with_zero_interior(frame, inner), spacing).reshape(N, m)
    b = U[inner].reshape(N, m) + bterm
    L = kron(Lint, identity(m), format="csr")
    V = U[inner].reshape(N, m).copy()
    scale = max(1.0, float(np.max(np.abs(b))))

    def residual(V):
        Z = b + dt * (Lint @ V)
        P, J = _reaction_prox(Z, dt, q, floor)
        return V - P, J

    G, J = residual(V)
    gnorm = float(np.max(np.abs(G)))
    for _ in range(max_iters):
        if gnorm <= tol * scale:
            break
        Jb = bsr_matrix((J, np.arange(N), np.arange(N + 1)), shape=(N * m, N * m))
        A = identity(N * m, format="csr") - dt * (Jb @ L)
        delta = spsolve(A.tocsc(), -G.ravel()).reshape(N, m)
        lam = 1.0
        while True:
            G_new, J_new = residual(V + lam * delta)
            new_norm = float(np.max(np.abs(G_new)))
            if new_norm < gnorm or lam < 1e-4:
                break
            lam *= 0.5
        V = V + lam * delta
        G, J, gnorm = G_new, J_new, new_norm
    if gnorm > tol * scale:
        raise ConvergenceError(f"Newton iteration stalled at step {step_index}", gnorm)
    # finish on the prox image so that extinguished nodes are exact zeros
    V = V - G
    out = frame
    out[inner] = V.reshape(inner_shape + (m,))
    return out


def default_reaction_floor(params: Params, dx: float) -> float:
    return 0.0 if params.q == 0 else dx ** params.kappa


def solve_cauchy(initial, config: SolverConfig, box, shape, params: Params | None = None) -> SpaceTimeField:
    """Advance initial data from the box's first time to its last.

    ``initial`` is an array of shape spatial_shape + (m,), a callable x -> u,
    an object with value(x, t) (evaluated at the first time), or None to take
    the boundary data's values there. Each step applies the diffusion as one
    backward-Euler solve (``imex_euler``) or a forward-Euler update
    (``explicit``), then the limited explicit reaction, so that the
    stored state carries exact zeros where the reaction extinguishes it.
    ``implicit_euler`` treats both terms implicitly in one nonlinear solve;
    it keeps the free boundary in place to O(dx) at dt ~ dx, where the
    split schemes displace it by O(sqrt(dt)).
    """
    box = tuple(tuple(float(v) for v in b) for b in box)
    shape = tuple(int(s) for s in shape)
    if params is None:
        params = getattr(initial, "params", None) or getattr(config.bc, "params", None)
    if params is None:
        raise DomainError("params are required when neither initial data nor bc carry them")
    n, m, q = params.n, params.m, params.q
    if len(box) != n + 1 or len(shape) != n + 1:
        raise DomainError("box and shape must list time plus n spatial axes")
    if any(s < 3 for s in shape[1:]) or shape[0] < 2:
        raise DomainError("need at least 3 nodes per spatial axis and 2 time levels")
    axes = _grid_axes(box, shape)
    times = axes[0]
    dt = (box[0][1] - box[0][0]) / (shape[0] - 1)
    if config.dt is not None and not math.isclose(config.dt, dt, rel_tol=1e-9, abs_tol=0.0):
        raise ValueError(f"config.dt={config.dt} disagrees with the grid step {dt}")
    spacing = [(b[1] - b[0]) / (s - 1) for b, s in zip(box[1:], shape[1:])]
    dx = min(spacing)
    if config.scheme == "explicit" and dt > dx * dx / (2 * n) * (1 + 1e-12):
        raise DomainError(f"explicit scheme needs dt <= dx²/(2n) = {dx * dx / (2 * n):.3e}")
    if config.scheme == "imex_euler" and dt > dx * (1 + 1e-12):
        raise DomainError(f"imex_euler needs dt <= dx = {dx:.3e} for reaction accuracy")
    floor = default_reaction_floor(params, dx) if config.reaction_floor is None else config.reaction_floor

    grids = np.meshgrid(*axes[1:], indexing="ij")
    X = np.stack(grids, axis=-1)
    spatial = shape[1:]
    if initial is None:
        U = np.array(_evaluate(config.bc, X, times[0], m), dtype=float)
    elif callable(initial) and not hasattr(initial, "value"):
        U = np.array(_evaluate(lambda x, t: initial(x), X, times[0], m), dtype=float)
    elif hasattr(initial, "value"):
        U = np.array(_evaluate(initial, X, times[0], m), dtype=float)
    else:
        U = np.array(initial, dtype=float).reshape(spatial + (m,))
    if not np.all(np.isfinite(U)):
        raise DomainError("initial data must be finite")

    inner = tuple(slice(1, -1) for _ in range(n))
    boundary = np.ones(spatial, dtype=bool)
    boundary[inner] = False
    Xb = X[boundary]
    inner_shape = tuple(s - 2 for s in spatial)
    out = np.empty((shape[0],) + spatial + (m,))
    out[0] = U

    if config.scheme == "implicit_euler":
        Lint = _interior_laplacian(inner_shape, spacing).tocsr()
    if config.scheme == "imex_euler":
        A = identity(int(np.prod(inner_shape)), format="csc") - dt * _interior_laplacian(inner_shape, spacing)
        lu = splu(A)
    for k in range(1, shape[0]):
        t = times[k]
        bc_values = _evaluate(config.bc, Xb, t, m)
        if config.scheme == "imex_euler":
            star = U.copy()
            star[boundary] = bc_values
            # boundary values enter the interior rows of (I - dt Δ) through the stencil
            rhs = U[inner] + dt * _full_laplacian(_with_zero_interior(star, inner), spacing)
            b = rhs.reshape(-1, m)
            sol = lu.solve(b)
            bscale = config.linear_tol * max(1.0, float(np.max(np.abs(b))))
            rnorm = float(np.max(np.abs(b - A @ sol)))
            sweeps = 0
            while rnorm > bscale:
                if sweeps == config.max_newton_iters:
                    raise ConvergenceError(f"linear solve did not reach tolerance at step {k}", rnorm)
                sol = sol + lu.solve(b - A @ sol)
                rnorm = float(np.max(np.abs(b - A @ sol)))
                sweeps += 1
            star[inner] = sol.reshape(inner_shape + (m,))
            U = _limited_reaction(star, dt, q, floor)
        elif config.scheme == "implicit_euler":
            U = _implicit_step(U, bc_values, inner, boundary, spacing, Lint, dt, q, floor, config.linear_tol,
                               config.max_newton_iters, k)
        else:
            new = U.copy()
            new[inner] = U[inner] + dt * _full_laplacian(U, spacing)
            U = _limited_reaction(new, dt, q, floor)
        U[boundary] = bc_values
        if not np.all(np.isfinite(U)):
            raise SolverError(f"non-finite values at step {k}", k)
        out[k] = U
    return SpaceTimeField(params, box, shape, out)


def _with_zero_interior(U, inner):
    Z = U.copy()
    Z[inner] = 0.0
    return Z
