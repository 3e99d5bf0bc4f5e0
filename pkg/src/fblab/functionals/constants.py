"""Closed-form energies of the half-space and time-flat solutions."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..core import Params, make_params


@dataclass(frozen=True)
class EnergyConstants:
    A_q: float
    M_theta: float

    def __getitem__(self, key):
        return getattr(self, key)

    def as_dict(self) -> dict:
        return {"A_q": self.A_q, "M_theta": self.M_theta}


def energy_constants(params) -> EnergyConstants:
    """Balanced energies of half-space solutions (A_q) and of the time-flat
    solution (M_theta). Accepts Params or a bare exponent q."""
    p = params if isinstance(params, Params) else make_params(params)
    k, q, a = p.kappa, p.q, p.alpha
    A = (a ** (1 + q) / (k * (k - 1))) * ((4 ** k - 1) / math.sqrt(math.pi)) * 2 ** (2 * k - 3) * math.gamma(k - 0.5)
    M = 2 ** (k - 1) / (k ** k * (k - 1)) * (4 ** k - 1)
    return EnergyConstants(float(A), float(M))
