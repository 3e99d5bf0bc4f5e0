"""Monotone energies, frequency, elliptic energies and half-space distance."""
from ..core import EnergyCurve
from .almgren import NotCaloricWarning, almgren, almgren_curve
from .constants import EnergyConstants, energy_constants
from .elliptic import elliptic_M, elliptic_parts, local_weiss, rescaled_slice
from .halfspace import HalfspaceFit, dist_to_H
from .weiss import (Cutoff, Localized, WeissLimit, cutoff_constant, cutoff_F, weiss, weiss_curve, weiss_limit,
                    weiss_localized)

__all__ = [
    "Cutoff", "EnergyConstants", "EnergyCurve", "HalfspaceFit", "Localized", "NotCaloricWarning", "WeissLimit",
    "almgren", "almgren_curve", "cutoff_F", "cutoff_constant", "dist_to_H", "elliptic_M", "elliptic_parts",
    "energy_constants", "local_weiss", "rescaled_slice", "weiss", "weiss_curve", "weiss_limit", "weiss_localized",
]
