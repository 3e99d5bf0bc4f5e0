"""Problem constants, sampled space-time fields, parabolic scalings and the
operators H = Δ - ∂ₜ and L = x·∇ + 2t∂ₜ - κ.

Conventions used throughout the package:

* spatial points are arrays whose last axis has length n;
* vector values are arrays whose last axis has length m;
* gradients have trailing shape (n, m);
* grids list the time axis first, then x₁ … xₙ.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import coo_matrix

from .errors import DomainError, OutOfDomainError


@dataclass(frozen=True)
class Params:
    q: float
    n: int = 1
    m: int = 2
    kappa: float = field(init=False)
    alpha: float = field(init=False)

    def __post_init__(self):
        if not (0.0 <= self.q < 1.0):
            raise DomainError(f"exponent out of range: q={self.q!r} (need 0 <= q < 1)")
        if self.n < 1 or self.m < 1:
            raise DomainError(f"dimensions must be positive: n={self.n}, m={self.m}")
        kappa = 2.0 / (1.0 - self.q)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "alpha", (kappa * (kappa - 1.0)) ** (-kappa / 2.0))

    def with_dims(self, n=None, m=None) -> "Params":
        return Params(self.q, self.n if n is None else n, self.m if m is None else m)


def make_params(q: float, n: int = 1, m: int = 2) -> Params:
    return Params(float(q), int(n), int(m))


@dataclass(frozen=True)
class SpaceTimePoint:
    x: tuple
    t: float

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in np.atleast_1d(self.x)))
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def parabolic_norm(self) -> float:
        # hypot avoids squaring tiny coordinates to zero
        return math.hypot(*self.x, math.sqrt(abs(self.t)))

    def as_array(self) -> np.ndarray:
        return np.array(self.x)


def as_point(X0, n=None) -> SpaceTimePoint:
    """Accept a SpaceTimePoint, an (x, t) pair, or None (the origin)."""
    if isinstance(X0, SpaceTimePoint):
        return X0
    if X0 is None:
        return SpaceTimePoint((0.0,) * (n or 1), 0.0)
    x, t = X0
    return SpaceTimePoint(x, t)


@dataclass(frozen=True)
class Cylinder:
    center: SpaceTimePoint
    radius: float
    kind: str = "lower"

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError("cylinder radius must be positive")
        if self.kind not in ("lower", "upper", "full"):
            raise DomainError(f"unknown cylinder kind {self.kind!r}")

    @property
    def time_range(self) -> tuple[float, float]:
        t0, r2 = self.center.t, self.radius ** 2
        return {"lower": (t0 - r2, t0), "upper": (t0, t0 + r2), "full": (t0 - r2, t0 + r2)}[self.kind]

    def contains(self, x, t) -> np.ndarray:
        """Membership test. Lower cylinders are half-open (t0 - r², t0]."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        inside = np.linalg.norm(x - self.center.as_array(), axis=-1) < self.radius
        lo, hi = self.time_range
        if self.kind == "lower":
            return inside & (t > lo) & (t <= hi)
        if self.kind == "upper":
            return inside & (t >= lo) & (t < hi)
        return inside & (t > lo) & (t < hi)


@dataclass(frozen=True, eq=False)
class EnergyCurve:
    """Radius-indexed functional values with additive corrections (such as F(r))
    and per-point error estimates. ``info`` carries free-form diagnostics."""

    radii: np.ndarray
    values: np.ndarray
    corrections: np.ndarray
    errors: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = [np.array(a, dtype=float).ravel() for a in (self.radii, self.values, self.corrections, self.errors)]
        if len({len(a) for a in arrays}) != 1:
            raise DomainError("energy curve arrays must have equal length")
        if len(arrays[0]) > 1 and np.any(np.diff(arrays[0]) <= 0):
            raise DomainError("energy curve radii must be strictly increasing")
        for name, a in zip(("radii", "values", "corrections", "errors"), arrays):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def totals(self) -> np.ndarray:
        return self.values + self.corrections

    def monotonicity_defect(self) -> float:
        """Largest drop of value + correction between consecutive radii."""
        if len(self.radii) < 2:
            return 0.0
        return float(max(0.0, np.max(-np.diff(self.totals))))

    def __len__(self):
        return len(self.radii)


def reaction(u: np.ndarray, q: float, floor: float = 0.0) -> np.ndarray:
    """f(u) = |u|^(q-1) u on {|u| > 0} and exactly 0 where |u| == 0.

    With floor > 0 the magnitude is clamped from below, u·max(|u|, floor)^(q-1),
    which keeps the law Lipschitz for q > 0.
    """
    u = np.asarray(u, dtype=float)
    mag = np.linalg.norm(u, axis=-1, keepdims=True)
    safe = np.maximum(mag, floor) if floor > 0 else mag
    out = np.zeros_like(u)
    pos = mag[..., 0] > 0
    out[pos] = u[pos] * safe[pos] ** (q - 1.0)
    return out


def _grid_axes(box, shape):
    return [np.linspace(lo, hi, k) for (lo, hi), k in zip(box, shape)]


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Vector field sampled on a uniform grid over a space-time box.

    ``box`` holds one (min, max) pair per axis, time first. ``values`` has shape
    ``shape + (m,)``. An optional boolean ``valid`` mask marks nodes where a
    derived quantity (e.g. a stencil) is trustworthy.
    """

    params: Params
    box: tuple
    shape: tuple
    values: np.ndarray
    valid: np.ndarray | None = None

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        shape = tuple(int(k) for k in self.shape)
        n, m = self.params.n, self.params.m
        if len(box) != n + 1 or len(shape) != n + 1:
            raise DomainError(f"box/shape need n+1={n + 1} axes")
        if any(hi <= lo for lo, hi in box) or any(k < 2 for k in shape):
            raise DomainError("grid spacings must be strictly positive")
        vals = np.array(self.values, dtype=float)
        if vals.size != math.prod(shape) * m:
            raise DomainError(f"expected {math.prod(shape) * m} samples, got {vals.size}")
        vals = vals.reshape(shape + (m,))
        if not np.all(np.isfinite(vals)):
            raise DomainError("field samples must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "values", vals)
        if self.valid is not None:
            mask = np.array(self.valid, dtype=bool).reshape(shape)
            mask.setflags(write=False)
            object.__setattr__(self, "valid", mask)

    # -- geometry -----------------------------------------------------------
    @cached_property
    def axes(self) -> list:
        return _grid_axes(self.box, self.shape)

    @property
    def spacing(self) -> tuple:
        return tuple((hi - lo) / (k - 1) for (lo, hi), k in zip(self.box, self.shape))

    @property
    def dt(self) -> float:
        return self.spacing[0]

    @property
    def dx(self) -> float:
        """Largest spatial spacing."""
        return max(self.spacing[1:])

    @property
    def times(self) -> np.ndarray:
        return self.axes[0]

    @property
    def spatial_bounds(self) -> tuple:
        return self.box[1:]

    def mesh(self) -> tuple:
        """Broadcastable node coordinates: (t, X) with X[..., i] = x_i."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        return grids[0], np.stack(grids[1:], axis=-1)

    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=-1)

    def with_values(self, values, valid=None) -> "SpaceTimeField":
        return SpaceTimeField(self.params, self.box, self.shape, values, valid)

    # -- finite differences -------------------------------------------------
    @cached_property
    def grad_values(self) -> np.ndarray:
        """Spatial gradient on the grid, shape ``shape + (n, m)``."""
        h = self.spacing
        parts = [np.gradient(self.values, h[i], axis=i, edge_order=2) for i in range(1, len(h))]
        return np.stack(parts, axis=-2)

    @cached_property
    def dt_values(self) -> np.ndarray:
        # centered in the interior, first-order one-sided at the slab ends
        return np.gradient(self.values, self.dt, axis=0, edge_order=1)

    @cached_property
    def laplacian_values(self) -> np.ndarray:
        """Second-order centered Laplacian; zero on the spatial boundary ring."""
        out = np.zeros_like(self.values)
        h = self.spacing
        inner = (slice(None),) + tuple(slice(1, -1) for _ in h[1:])
        for i in range(1, len(h)):
            up = [slice(None)] + [slice(1, -1)] * (len(h) - 1)
            dn = list(up)
            up[i] = slice(2, None)
            dn[i] = slice(None, -2)
            out[inner] += (self.values[tuple(up)] - 2 * self.values[inner] + self.values[tuple(dn)]) / h[i] ** 2
        return out

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[(slice(None),) + tuple(slice(1, -1) for _ in self.shape[1:])] = True
        return mask

    # -- point evaluation (multilinear) --------------------------------------
    def _interp(self, data):
        return RegularGridInterpolator(self.axes, data, method="linear", bounds_error=False, fill_value=None)

    @cached_property
    def _value_interp(self):
        return self._interp(self.values)

    @cached_property
    def _grad_interp(self):
        return self._interp(self.grad_values)

    @cached_property
    def _dt_interp(self):
        return self._interp(self.dt_values)

    def _query(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        pts = np.concatenate([t[..., None], x], axis=-1)
        flat = pts.reshape(-1, pts.shape[-1])
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        slack = 1e-9 * np.maximum(1.0, hi - lo)
        bad = np.any((flat < lo - slack) | (flat > hi + slack), axis=1)
        if np.any(bad):
            raise OutOfDomainError(f"sample point {tuple(flat[np.argmax(bad)])} outside box {self.box}")
        return np.clip(flat, lo, hi), x.shape[:-1]

    def value(self, x, t) -> np.ndarray:
        flat, lead = self._query(x, t)
        return self._value_interp(flat).reshape(lead + (self.params.m,))

    def gradient(self, x, t) -> np.ndarray:
        flat, lead = self._query(x, t)
        return self._grad_interp(flat).reshape(lead + (self.params.n, self.params.m))

    def time_derivative(self, x, t) -> np.ndarray:
        flat, lead = self._query(x, t)
        return self._dt_interp(flat).reshape(lead + (self.params.m,))


def _target_grid(box, shape):
    grids = np.meshgrid(*_grid_axes(box, shape), indexing="ij")
    return grids[0], np.stack(grids[1:], axis=-1)


def parabolic_rescale(u, X0, r: float, box=None, shape=None) -> SpaceTimeField:
    """Sample u_{r,X0}(x, t) = u(r x + x0, r² t + t0) / r^κ on a target grid.

    Without an explicit target the preimage of u's own box is used, with the
    same node counts. Values come from multilinear interpolation of u.
    """
    if r <= 0:
        raise DomainError("scale r must be positive")
    X0 = as_point(X0, u.params.n)
    x0 = X0.as_array()
    if box is None:
        box = [((u.box[0][0] - X0.t) / r ** 2, (u.box[0][1] - X0.t) / r ** 2)]
        box += [((lo - c) / r, (hi - c) / r) for (lo, hi), c in zip(u.box[1:], x0)]
    shape = tuple(shape) if shape is not None else u.shape
    box = tuple(tuple(b) for b in box)
    # check every corner of the mapped box
    for idx in np.ndindex(*(2,) * len(box)):
        corner = [box[a][k] for a, k in enumerate(idx)]
        mapped = [r * r * corner[0] + X0.t] + [r * c + c0 for c, c0 in zip(corner[1:], x0)]
        for a, v in enumerate(mapped):
            lo, hi = u.box[a]
            if v < lo - 1e-9 * max(1, hi - lo) or v > hi + 1e-9 * max(1, hi - lo):
                raise OutOfDomainError(f"rescaled corner {tuple(corner)} maps to {tuple(mapped)} outside {u.box}")
    T, X = _target_grid(box, shape)
    vals = u.value(r * X + x0, r * r * T + X0.t) / r ** u.params.kappa
    return SpaceTimeField(u.params, box, shape, vals)


def apply_L(u: SpaceTimeField) -> SpaceTimeField:
    """Lu = x·∇u + 2t ∂ₜu - κu; the spatial boundary ring is marked invalid."""
    T, X = u.mesh()
    Lu = np.einsum("...i,...im->...m", X, u.grad_values) + 2 * T[..., None] * u.dt_values
    Lu = Lu - u.params.kappa * u.values
    return u.with_values(Lu, valid=u.interior_mask())


def heat_residual(u: SpaceTimeField) -> SpaceTimeField:
    """Hu - f(u) with H = Δ - ∂ₜ; the spatial boundary ring is marked invalid."""
    mask = u.interior_mask()
    res = u.laplacian_values - u.dt_values - reaction(u.values, u.params.q)
    res = np.where(mask[..., None], res, 0.0)
    return u.with_values(res, valid=mask)


# ---------------------------------------------------------------------------
# spatial meshes of the closed unit ball (used by the elliptic energies)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BallMesh:
    """P1 finite-element mesh of the closed unit ball for n in {1, 2}.

    n = 1 uses a uniform partition of [-1, 1]; the "sphere" is {-1, 1} with
    counting measure. n = 2 uses a polar triangulation with ``rings`` radial
    layers and ``sectors`` nodes per ring. Lumped mass weights are exact
    control-volume areas, so they sum to |B₁|; boundary weights sum to |∂B₁|.
    """

    n: int
    rings: int
    sectors: int = 1
    nodes: np.ndarray = field(init=False, repr=False)
    stiffness: object = field(init=False, repr=False)
    mass: np.ndarray = field(init=False, repr=False)
    boundary: np.ndarray = field(init=False, repr=False)
    boundary_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n == 1:
            self._build_interval()
        elif self.n == 2:
            if self.sectors < 8:
                raise DomainError("polar mesh needs at least 8 sectors")
            self._build_disk()
        else:
            raise DomainError("ball meshes are available for n in {1, 2}")

    def _build_interval(self):
        N = 2 * self.rings
        x = np.linspace(-1.0, 1.0, N + 1)
        h = 2.0 / N
        i = np.arange(N)
        rows = np.concatenate([i, i + 1, i, i + 1])
        cols = np.concatenate([i, i + 1, i + 1, i])
        data = np.concatenate([np.full(N, 1 / h), np.full(N, 1 / h), np.full(N, -1 / h), np.full(N, -1 / h)])
        K = coo_matrix((data, (rows, cols)), shape=(N + 1, N + 1)).tocsr()
        mass = np.full(N + 1, h)
        mass[[0, -1]] = h / 2
        object.__setattr__(self, "nodes", x[:, None])
        object.__setattr__(self, "stiffness", K)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "boundary", np.array([0, N]))
        object.__setattr__(self, "boundary_weights", np.array([1.0, 1.0]))

    def _build_disk(self):
        R, S = self.rings, self.sectors
        h = 1.0 / R
        phi = 2 * np.pi * np.arange(S) / S
        rad = h * np.arange(1, R + 1)
        pts = [np.zeros((1, 2))]
        pts.append(np.stack([np.outer(rad, np.cos(phi)).ravel(), np.outer(rad, np.sin(phi)).ravel()], axis=1))
        nodes = np.concatenate(pts)

        def idx(i, j):  # ring i >= 1, sector j
            return 1 + (i - 1) * S + (j % S)

        tris = []
        for j in range(S):
            tris.append((0, idx(1, j), idx(1, j + 1)))
        for i in range(1, R):
            for j in range(S):
                a, b, c, d = idx(i, j), idx(i, j + 1), idx(i + 1, j), idx(i + 1, j + 1)
                tris.append((a, c, d))
                tris.append((a, d, b))
        tris = np.array(tris)
        P = nodes[tris]  # (T, 3, 2)
        e1 = P[:, 1] - P[:, 0]
        e2 = P[:, 2] - P[:, 0]
        area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        # gradients of barycentric basis functions
        edges = np.stack([P[:, 2] - P[:, 1], P[:, 0] - P[:, 2], P[:, 1] - P[:, 0]], axis=1)
        grads = np.stack([-edges[..., 1], edges[..., 0]], axis=-1) / (2 * area[:, None, None])
        sign = np.sign(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        grads = grads * sign[:, None, None]
        local = np.einsum("tai,tbi->tab", grads, grads) * area[:, None, None]
        rows = np.repeat(tris, 3, axis=1).ravel()
        cols = np.tile(tris, (1, 3)).ravel()
        K = coo_matrix((local.ravel(), (rows, cols)), shape=(len(nodes), len(nodes))).tocsr()
        mass = np.empty(len(nodes))
        mass[0] = np.pi * (h / 2) ** 2
        for i in range(1, R + 1):
            outer = min(1.0, (i + 0.5) * h)
            ring_area = np.pi * (outer ** 2 - ((i - 0.5) * h) ** 2)
            mass[idx(i, 0):idx(i, 0) + S] = ring_area / S
        boundary = np.arange(idx(R, 0), idx(R, 0) + S)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "stiffness", K)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "boundary_weights", np.full(S, 2 * np.pi / S))

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.size, dtype=bool)
        mask[self.boundary] = False
        return np.flatnonzero(mask)

    def refined(self, factor: int = 2) -> "BallMesh":
        return BallMesh(self.n, self.rings * factor, self.sectors * factor if self.n == 2 else 1)

    def rotated_nodes(self, rotation) -> np.ndarray:
        return self.nodes @ np.asarray(rotation).T


def ball_mesh(n: int, resolution: int = 64, sectors: int | None = None) -> BallMesh:
    """Default meshes: 2·resolution cells on [-1,1], or a polar disk mesh."""
    if n == 1:
        return BallMesh(1, resolution)
    return BallMesh(2, resolution, sectors or 144)


@dataclass(frozen=True, eq=False)
class BallField:
    """Vector values at the nodes of a BallMesh."""

    mesh: BallMesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] != self.mesh.size:
            raise DomainError("ball field must have one value per mesh node")
        if not np.all(np.isfinite(vals)):
            raise DomainError("ball field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def trace(self) -> np.ndarray:
        return self.values[self.mesh.boundary]


def sample_on_ball(func, mesh: BallMesh, m: int | None = None) -> BallField:
    """Evaluate a callable of spatial points (..., n) -> (..., m) on mesh nodes."""
    vals = np.asarray(func(mesh.nodes), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return BallField(mesh, vals)


def homogeneous_extension(trace, mesh: BallMesh, kappa: float) -> BallField:
    """c(x) = |x|^κ · trace(x/|x|), with trace a callable on unit vectors or an
    array of values on the mesh boundary nodes (same ordering)."""
    x = mesh.nodes
    rad = np.linalg.norm(x, axis=1)
    if callable(trace):
        direction = np.where(rad[:, None] > 0, x / np.where(rad > 0, rad, 1.0)[:, None], 0.0)
        if mesh.n == 2:
            direction[rad == 0] = (1.0, 0.0)
        else:
            direction[rad == 0] = 1.0
        vals = np.asarray(trace(direction), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
    else:
        tr = np.asarray(trace, dtype=float)
        if tr.ndim == 1:
            tr = tr[:, None]
        vals = _angular_lookup(mesh, tr)
    return BallField(mesh, rad[:, None] ** kappa * vals)


def _angular_lookup(mesh: BallMesh, trace: np.ndarray) -> np.ndarray:
    """Extend boundary-node values radially (node-wise, exact on the polar mesh)."""
    if mesh.n == 1:
        out = np.where(mesh.nodes[:, :1] >= 0, trace[1], trace[0])
        return out
    S = mesh.sectors
    out = np.empty((mesh.size, trace.shape[1]))
    out[0] = trace.mean(axis=0)
    out[1:] = np.tile(trace, (mesh.rings, 1))
    assert S == len(trace)
    return out
