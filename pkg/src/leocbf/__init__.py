"""Coverage analysis of LEO satellite downlinks with dynamic coordinated beamforming."""
__version__ = "0.1.0"

from .geometry import (SphereGeometry, RingGeometry, visible_cap_area, cap_area_within,
                       to_ring, density_for_mean_count)
from .special import FadingParams
from .interference import LinkBudget, RadioConfig
from .distributions import count_probabilities
from .coverage import (CoverageQuery, CoverageResult, coverage_cond_delta,
                       coverage_cond_delta_approx, coverage_marginal, ergodic_se,
                       optimal_cluster_size, rate_coverage)
