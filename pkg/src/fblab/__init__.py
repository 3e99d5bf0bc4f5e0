"""Numerical laboratory for a parabolic free-boundary system with sublinear reaction."""
from .core import (BallField, BallMesh, Cylinder, EnergyCurve, Params, SpaceTimeField, SpaceTimePoint, apply_L,
                   ball_mesh, heat_residual, make_params, parabolic_rescale)

__version__ = "0.1.0"
