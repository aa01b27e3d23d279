"""Secret-key rates of quantum repeaters built from GKP qudits."""

from .gkp_math import (
    JointPauliDistribution,
    PauliDistribution,
    convolve,
    convolve_power,
    distribution_from_gaussian,
    entropy,
    secret_key_rate,
    shift_probability,
)
from .half_teleport import Placement, placement_p0, placement_ranking
from .noise import (
    LinkParams,
    NoiseBudget,
    fiber_transmittance,
    input_noise_variance,
    measurement_variance,
    squeezing_to_variance,
)
from .polycode import PolynomialCode, erasure_binning, optimal_gamma, p_correctable, p_fail, station_error_channel
from .protocols import (
    Protocol,
    RateResult,
    RepeaterConfig,
    bare_rate,
    encoded_rate,
    optimal_bare_dimension,
    optimal_spacing,
    rate,
    rate_vs_input_noise,
    station_count,
)

__version__ = "0.1.0"
