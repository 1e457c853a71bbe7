from .factorized import FactorizedDensity
from .likelihood import PROB_FLOOR, SIGMA_MIN, gaussian_noisy_likelihood, rate_bits
from .tables import (
    CDF_TOTAL,
    MAX_ALPHABET,
    NUM_SCALE_LEVELS,
    SCALE_MAX,
    SCALE_MIN,
    CdfTable,
    ScaleTable,
    build_cdf_table,
    gaussian_symbol_probability,
    scale_levels,
    scale_to_level,
)

__all__ = [
    "CDF_TOTAL",
    "CdfTable",
    "FactorizedDensity",
    "MAX_ALPHABET",
    "NUM_SCALE_LEVELS",
    "PROB_FLOOR",
    "SCALE_MAX",
    "SCALE_MIN",
    "SIGMA_MIN",
    "ScaleTable",
    "build_cdf_table",
    "gaussian_noisy_likelihood",
    "gaussian_symbol_probability",
    "rate_bits",
    "scale_levels",
    "scale_to_level",
]
