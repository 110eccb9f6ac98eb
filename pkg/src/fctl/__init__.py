"""Exact and heavy-traffic analysis of the fixed-cycle traffic-light queue.

The package evaluates the stationary overflow queue of a single signalised
lane (contour-integral transform, Markov-chain oracle, Gaussian random walk
approximations) and allocates green time among the lanes of an
intersection.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, FctlError, InfeasibleError, NumericalError, ResourceError
from .arrivals import ArrivalModel, CustomPmf, Geometric, NegativeBinomial, Poisson, arrival_from_dict
from .gauss_rw import g_kernel, mean_max, mgf_max, prob_zero_max, zeta_half_line
from .transform import (
    FctlInstance,
    GreenTime,
    SaddleInfo,
    mean_overflow,
    overflow_distribution,
    overflow_moment,
    overflow_pgf,
    overflow_pmf,
    prob_empty,
    saddle_point,
    scaled_mgf,
)
from .oracle import simulate, stationary_overflow
from .heavy_traffic import (
    HeavyTrafficPoint,
    cycle_from_green,
    inverse_scaling,
    mean_first_order,
    mean_refined,
    p_empty_approx,
    scaling,
)
from .allocation import (
    AllocationResult,
    IntersectionSpec,
    LaneSpec,
    beta_star,
    brute_force_integer,
    first_order,
    refined_betas,
    round_greens,
    weighted_closed_form,
    weighted_numerical,
)
from .delay import DelayReport, intersection_delay, mean_delay, webster_allocation, webster_delay
