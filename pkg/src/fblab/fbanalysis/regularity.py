"""Spatial/temporal regularity of the free boundary and fixed-time energy decay."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import SpaceTimeField, SpaceTimePoint, as_point
from ..errors import ResolutionError
from ..functionals.elliptic import local_weiss
from ..functionals.weiss import _geometric_extrapolate
from .classify import REGULAR, classify_point
from .extract import extract_fb


@dataclass(frozen=True)
class NormalFieldFit:
    """``exponent`` is the largest swept a whose pairwise Hölder constant is
    stable (the worst quotient does not come from the shortest pair
    distances); ``time_constant`` bounds Hausdorff(Γ_t, Γ_s)/|t-s|^{1/2}."""

    normals: dict
    exponent: float | None
    constant: float | None
    sweep: np.ndarray
    sweep_constants: np.ndarray
    sweep_stable: np.ndarray
    time_constant: float
    time_finite: bool
    info: dict = field(default_factory=dict, repr=False)


def _pairwise(points):
    P = np.asarray(points, dtype=float)
    i, j = np.triu_indices(len(P), 1)
    return i, j, np.linalg.norm(P[i] - P[j], axis=1)


def holder_sweep(xs, nus, exponents, stability: float = 2.0):
    """max_{pairs}|ν(x)-ν(y)|/|x-y|^a for each a, with a stability flag.

    Pairs are split at the median distance; a is stable when the worst
    quotient among the closer half exceeds the worst among the farther half
    by no more than ``stability`` (quotients that keep growing as pairs get
    closer signal an exponent above the true one).
    """
    i, j, d = _pairwise(xs)
    N = np.asarray(nus, dtype=float)
    jump = np.linalg.norm(N[i] - N[j], axis=1)
    keep = d > 0
    i, j, d, jump = i[keep], j[keep], d[keep], jump[keep]
    near = d <= np.median(d)
    consts, stable = [], []
    for a in exponents:
        qt = jump / d ** a
        c = float(np.max(qt)) if qt.size else 0.0
        far_max = float(np.max(qt[~near])) if np.any(~near) else c
        near_max = float(np.max(qt[near])) if np.any(near) else 0.0
        consts.append(c)
        stable.append(near_max <= stability * far_max or c <= 1e-12)
    return np.array(consts), np.array(stable, dtype=bool)


def _hausdorff(A, B):
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=-1)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def _time_fit(u, t0, window, max_slices):
    times = u.times[(u.times >= t0 - window - 1e-12) & (u.times <= t0 + 1e-12)]
    if len(times) > max_slices:
        times = times[np.unique(np.linspace(0, len(times) - 1, max_slices).round().astype(int))]
    sample = extract_fb(u)
    sets = []
    for t in times:
        pts = [np.array(sample.points[i].x) for i in sample.at_time(float(t))]
        sets.append(np.array(pts) if pts else None)
    worst, finite = 0.0, True
    for a in range(len(times)):
        for b in range(a + 1, len(times)):
            if sets[a] is None or sets[b] is None:
                finite = False
                continue
            worst = max(worst, _hausdorff(sets[a], sets[b]) / math.sqrt(times[b] - times[a]))
    return worst, finite, times


def normal_field_fit(u, t0: float, points=None, radii=None, rule=None, exponents=None, max_points: int = 24,
                     window: float = 0.25, max_slices: int = 16, executor=None) -> NormalFieldFit:
    """(ν, e) at Regular free-boundary points of the slice t0 and Hölder fits.

    Sampled fields use the subcell boundary locations at t0 (at most ``max_points``,
    evenly spread); closed forms need explicit ``points``. The time fit uses
    the extracted boundary over [t0 - window, t0] (sampled fields only).
    """
    if points is None:
        if not isinstance(u, SpaceTimeField):
            raise ValueError("closed-form inputs need explicit free-boundary points")
        sample = extract_fb(u)
        idx = sample.at_time(t0)
        if len(idx) > max_points:
            idx = [idx[k] for k in np.unique(np.linspace(0, len(idx) - 1, max_points).round().astype(int))]
        points = [sample.located[i] for i in idx]
    points = [as_point(P, u.params.n) for P in points]

    def one(P):
        try:
            c = classify_point(u, P, rule, radii)
        except ValueError:
            return P, None
        fit = c.evidence.get("halfspace_fit")
        return (P, (fit.nu, fit.e)) if c.label == REGULAR and fit is not None else (P, None)

    mapper = executor.map if executor is not None else map
    normals = {P: ne for P, ne in mapper(one, points) if ne is not None}
    if len(normals) < 2:
        raise ResolutionError(f"{len(normals)} regular points at t0; need at least two")
    exponents = np.linspace(0.05, 1.0, 20) if exponents is None else np.asarray(exponents, dtype=float)
    xs = [P.as_array() for P in normals]
    nus = [ne[0] for ne in normals.values()]
    consts, stable = holder_sweep(xs, nus, exponents)
    ok = np.flatnonzero(stable & np.isfinite(consts))
    exponent = float(exponents[ok[-1]]) if ok.size else None
    constant = float(consts[ok[-1]]) if ok.size else None
    if isinstance(u, SpaceTimeField):
        tconst, tfinite, times = _time_fit(u, t0, window, max_slices)
    else:
        tconst, tfinite, times = 0.0, True, np.array([t0])
    return NormalFieldFit(normals, exponent, constant, exponents, consts, stable, tconst, tfinite,
                          {"points_tried": len(points), "time_slices": times})


@dataclass(frozen=True)
class EnergyDecay:
    """W_{t0}(u, r, x0) across radii; gamma_fit is None when the residuals
    against the extrapolated limit are all below ``noise``."""

    radii: np.ndarray
    values: np.ndarray
    limit: float
    gamma_fit: float | None
    monotonicity_defect: float
    defect_fit: tuple | None
    residuals: np.ndarray

    def __iter__(self):
        yield self.gamma_fit
        yield self.monotonicity_defect


def local_energy_decay(u, X0, radii, mesh=None, noise: float = 1e-10) -> EnergyDecay:
    """Fixed-time energy W_{t0} at each radius, its limit (geometric
    extrapolation from the three smallest radii, or the smallest value), the
    r^γ fit of |W(r) - W(0+)| and the largest drop W(r_i) - W(r_{i+1}).
    With at least two drops, C and β of drop_i ≈ C|r_{i+1}^β - r_i^β| are
    fitted (``defect_fit``)."""
    X0 = as_point(X0, u.params.n)
    radii = np.sort(np.asarray(radii, dtype=float))
    if len(radii) < 2:
        raise ResolutionError("need at least two radii")
    W = np.array([local_weiss(u, float(r), X0.x, X0.t, mesh) for r in radii])
    scale = max(1.0, float(np.max(np.abs(W))))
    ratios = radii[1:] / radii[:-1]
    if len(radii) >= 3 and np.ptp(ratios[:2]) <= 1e-6 * ratios[0]:
        limit = float(_geometric_extrapolate(radii[:3], W[:3]))
    else:
        limit = float(W[0])
    res = np.abs(W - limit)
    pos = res > noise * scale
    gamma = None
    if pos.sum() >= 2:
        gamma = float(np.polyfit(np.log(radii[pos]), np.log(res[pos]), 1)[0])
    drops = np.maximum(0.0, W[:-1] - W[1:])
    defect = float(np.max(drops)) if drops.size else 0.0
    dfit = None
    big = drops > noise * scale
    if big.sum() >= 2:
        best = None
        for beta in np.linspace(0.05, 2.0, 40):
            span = np.abs(radii[1:] ** beta - radii[:-1] ** beta)[big]
            C = float(np.max(drops[big] / span))
            spread = float(np.ptp(np.log(drops[big] / span)))
            if best is None or spread < best[2]:
                best = (C, float(beta), spread)
        dfit = best[:2]
    return EnergyDecay(radii, W, limit, gamma, defect, dfit, res)
