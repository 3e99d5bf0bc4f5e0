"""Free-boundary extraction from a sampled field."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import SpaceTimeField, SpaceTimePoint
from .sampling import default_threshold


@dataclass
class FreeBoundarySample:
    """Grid faces across which the indicator |u| > threshold changes.

    ``points`` are face midpoints; ``anchors`` the grid node on the positive
    side of each face (a sample point of the positivity set). ``located``
    are subcell estimates: |u|^(1/κ), which is linear in the distance for
    half-space-like profiles, is extrapolated to zero from the anchor by one
    Newton step, kept within a cell diagonal.
    ``per_point`` is filled by analyze_points.
    """

    points: list
    anchors: list
    threshold: float
    per_point: dict = field(default_factory=dict)
    located: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def at_time(self, t: float, tol: float = 1e-9) -> list:
        return [i for i, p in enumerate(self.points) if abs(p.t - t) <= tol]


def extract_fb(u: SpaceTimeField, threshold: float | None = None) -> FreeBoundarySample:
    thr = default_threshold(u) if threshold is None else float(threshold)
    if thr < 0:
        raise ValueError("threshold must be nonnegative")
    positive = u.norm() > thr
    T, X = u.mesh()
    w = np.maximum(u.norm() - thr, 0.0) ** (1.0 / u.params.kappa)
    found = {}
    n = u.params.n
    for axis in range(1, n + 1):
        lo = [slice(None)] * (n + 1)
        hi = [slice(None)] * (n + 1)
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        change = positive[lo] != positive[hi]
        for idx in zip(*np.nonzero(change)):
            a = tuple(idx)
            b = list(idx)
            b[axis] += 1
            b = tuple(b)
            mid = 0.5 * (X[a] + X[b])
            anchor, other = (a, b) if positive[a] else (b, a)
            key = (float(T[a]),) + tuple(np.round(mid, 12))
            found[key] = (SpaceTimePoint(mid, T[a]), SpaceTimePoint(X[anchor], T[anchor]),
                          SpaceTimePoint(_subcell(w, X, anchor, other, axis), T[anchor]))
    ordered = [found[k] for k in sorted(found)]
    return FreeBoundarySample([p for p, _, _ in ordered], [a for _, a, _ in ordered], thr,
                              located=[c for _, _, c in ordered])


def _subcell(w, X, anchor, other, axis):
    # one Newton step on w from the anchor, with one-sided differences taken
    # toward the larger neighbor on every spatial axis (w has a kink at Γ)
    xa = X[anchor]
    grad = np.zeros(len(xa))
    for ax in range(1, w.ndim):
        best = None
        for sgn in (1, -1):
            nb = list(anchor)
            nb[ax] += sgn
            if 0 <= nb[ax] < w.shape[ax]:
                nb = tuple(nb)
                if best is None or w[nb] > best[0]:
                    best = (w[nb], sgn * (X[nb][ax - 1] - xa[ax - 1]))
        if best is not None:
            grad[ax - 1] = (best[0] - w[anchor]) / best[1]
    g2 = float(grad @ grad)
    if g2 == 0.0:
        return xa
    target = xa - w[anchor] * grad / g2
    # keep the estimate within one cell diagonal of the face
    reach = np.linalg.norm(X[other] - xa) * np.sqrt(len(xa))
    step = target - xa
    size = float(np.linalg.norm(step))
    return xa + step * min(1.0, reach / size) if size > 0 else xa
