"""Free-boundary extraction and per-point diagnostics: growth, blow-ups,
classification, subcaloricity checks, epiperimetric testing and regularity fits."""
from .checks import PointwiseReport, SlabCheck, pointwise_diagnostics, subcaloric_exponent, support_slab_check
from .classify import (NON_REGULAR, REGULAR, UNKNOWN, BlowupSequence, Classification, analyze_points,
                       blowup_sequence, classify_point, default_radii, is_free_boundary_point, fit_radius)
from .epiperimetric import EpiperimetricResult, epiperimetric_test
from .extract import FreeBoundarySample, extract_fb
from .growth import (GrowthFit, TimeDecay, admissible_orders, growth_fit, nondegeneracy_fit,
                     time_derivative_decay, vanishing_order)
from .regularity import EnergyDecay, NormalFieldFit, holder_sweep, local_energy_decay, normal_field_fit
from .sampling import Rescaled, cylinder_sup, default_threshold
