"""Blow-up sequences and regular / non-regular classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import SpaceTimeField, as_point, parabolic_rescale
from ..errors import ContractError, DegenerateError, OutOfDomainError
from ..functionals.constants import energy_constants
from ..functionals.halfspace import dist_to_H
from ..functionals.weiss import weiss_limit
from ..kernels.quadrature import QuadratureRule
from .growth import growth_fit, nondegeneracy_fit
from .sampling import Rescaled, cylinder_samples, default_threshold

REGULAR, NON_REGULAR, UNKNOWN = "Regular", "NonRegular", "Unknown"


@dataclass(frozen=True)
class BlowupSequence:
    fields: list
    radii: np.ndarray
    differences: np.ndarray
    rate: float | None

    def __iter__(self):
        yield self.fields
        yield self.differences


def _sphere_points(n, count=256):
    if n == 1:
        return np.array([[-1.0], [1.0]]), np.array([1.0, 1.0])
    phi = 2 * np.pi * np.arange(count) / count
    return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(count, 2 * np.pi / count)


def blowup_sequence(u, X0, radii_desc, time: float = -0.25, box=None, shape=None) -> BlowupSequence:
    """Rescalings u_{r,X0} for descending radii and the L¹(∂B₁) distances
    between consecutive ones on the slice t = ``time``; ``rate`` is the fitted
    log-log slope of those distances against r (None if they vanish)."""
    radii = np.asarray(radii_desc, dtype=float)
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")
    n = u.params.n
    X0 = as_point(X0, n)
    if not np.any(cylinder_samples(u, X0, float(radii[-1])) > default_threshold(u)):
        raise DegenerateError("u vanishes near X0; blow-ups are trivial")
    pts, w = _sphere_points(n)
    traces = []
    fields = []
    for r in radii:
        scaled = Rescaled(u, X0, r)
        if isinstance(u, SpaceTimeField):
            target_box = box or ((-1.0, 0.0),) + ((-1.0, 1.0),) * n
            target_shape = shape or (33,) + (65,) * n
            fields.append(parabolic_rescale(u, X0, r, target_box, target_shape))
        else:
            fields.append(scaled)
        traces.append(scaled.value(pts, time))
    diffs = np.array([float(w @ np.linalg.norm(a - b, axis=-1)) for a, b in zip(traces[:-1], traces[1:])])
    rate = None
    scale = max(1.0, max(float(np.max(np.abs(t))) for t in traces))
    pos = diffs > 1e-12 * scale
    if pos.sum() >= 2:
        rate = float(np.polyfit(np.log(radii[1:][pos]), np.log(diffs[pos]), 1)[0])
    return BlowupSequence(fields, radii, diffs, rate)


@dataclass(frozen=True)
class Classification:
    label: str
    limit: float
    band: float
    A_q: float
    evidence: dict = field(default_factory=dict, repr=False)

    def __str__(self):
        return self.label


def _membership_radius(u):
    if isinstance(u, SpaceTimeField):
        return 2.5 * max(u.dx, math.sqrt(u.dt))
    return 1e-3


def is_free_boundary_point(u, X0, threshold=None) -> bool:
    """Both |u| <= threshold and |u| > threshold occur in a small full cylinder
    around X0 (future times included when available)."""
    thr = default_threshold(u) if threshold is None else threshold
    rho = _membership_radius(u)
    future = rho * rho
    X0 = as_point(X0, u.params.n)
    if isinstance(u, SpaceTimeField):
        future = min(future, max(0.0, u.box[0][1] - X0.t))
    try:
        vals = cylinder_samples(u, X0, rho, future=future)
    except OutOfDomainError:
        return False
    return bool(np.any(vals <= thr) and np.any(vals > thr))


def default_radii(u, X0, count: int = 5):
    """Dyadic radii from min(1/2, largest admissible) downwards."""
    X0 = as_point(X0, u.params.n)
    r_max = 0.5
    if isinstance(u, SpaceTimeField):
        r_max = min(r_max, 0.5 * math.sqrt(max(0.0, X0.t - u.box[0][0])))
    return r_max * 0.5 ** np.arange(count)[::-1]


def fit_radius(u, radii) -> float:
    """Smallest radius whose blow-up is resolved: r >= 2·max(dx, sqrt(dt)) for
    sampled fields (the largest radius if none is), the smallest otherwise."""
    radii = np.sort(np.asarray(radii, dtype=float))
    if not isinstance(u, SpaceTimeField):
        return float(radii[0])
    floor = 2 * max(u.dx, math.sqrt(u.dt))
    ok = radii[radii >= floor * (1 - 1e-9)]
    return float(ok[0]) if ok.size else float(radii[-1])


def classify_point(u, X0, rule: QuadratureRule | None = None, radii=None, dist_tol: float = 0.1,
                   band_floor: float = 1e-6, threshold=None, executor=None) -> Classification:
    """Regular if |W(0+) - A_q| <= band and the blow-up at ``fit_radius`` is
    within ``dist_tol`` (relative) of the half-space class; NonRegular if
    W(0+) >= A_q + 2·band; Unknown otherwise.

    band = max(3 × (quadrature error + extrapolation spread), band_floor·max(1, A_q)).
    """
    p = u.params
    X0 = as_point(X0, p.n)
    if not is_free_boundary_point(u, X0, threshold):
        raise ContractError(f"{X0} is not a free boundary point of u")
    radii = default_radii(u, X0) if radii is None else np.sort(np.asarray(radii, dtype=float))
    consts = energy_constants(p)
    A = consts.A_q
    lim = weiss_limit(u, X0, radii, rule, executor=executor)
    quad = float(np.max(lim.curve.errors[:4]))
    band = max(3 * (quad + lim.spread), band_floor * max(1.0, A))
    evidence = {"weiss": lim, "M_theta": consts.M_theta}
    fit = None
    try:
        fit = dist_to_H(Rescaled(u, X0, fit_radius(u, radii)))
    except (OutOfDomainError, ValueError) as exc:
        evidence["halfspace_error"] = str(exc)
    evidence["halfspace_fit"] = fit
    if len(radii) >= 5:
        try:
            evidence["growth"] = growth_fit(u, X0, radii)
        except DegenerateError as exc:
            evidence["growth_error"] = str(exc)
    try:
        evidence["c_hat"] = nondegeneracy_fit(u, X0, radii, threshold)
    except ContractError:
        evidence["c_hat"] = 0.0
    if p.q == 0:
        evidence["near_M_theta"] = abs(lim.limit - consts.M_theta) <= max(band, 1e-2)
    if abs(lim.limit - A) <= band and fit is not None and fit.relative_distance <= dist_tol:
        label = REGULAR
    elif lim.limit >= A + 2 * band:
        label = NON_REGULAR
    else:
        label = UNKNOWN
    return Classification(label, lim.limit, band, A, evidence)


def analyze_points(u, sample, indices=None, rule: QuadratureRule | None = None, executor=None, radii=None) -> dict:
    """Classify selected free-boundary anchors and record the results in
    ``sample.per_point`` (keyed by the face point). Order of evaluation does
    not affect the result."""
    indices = range(len(sample.points)) if indices is None else indices
    indices = list(indices)

    def one(i):
        anchor = sample.anchors[i]
        try:
            c = classify_point(u, anchor, rule, radii)
        except (ContractError, OutOfDomainError, DegenerateError) as exc:
            return i, {"classification": UNKNOWN, "error": str(exc)}
        fit = c.evidence.get("halfspace_fit")
        growth = c.evidence.get("growth")
        return i, {"weiss_limit": c.limit, "classification": c.label,
                   "nu": None if fit is None else fit.nu, "e": None if fit is None else fit.e,
                   "c_hat": c.evidence.get("c_hat"), "growth_exponent": None if growth is None else growth.exponent}

    mapper = executor.map if executor is not None else map
    for i, rec in sorted(mapper(one, indices), key=lambda item: item[0]):
        sample.per_point[sample.points[i]] = rec
    return sample.per_point
