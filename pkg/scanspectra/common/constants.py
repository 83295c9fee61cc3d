"""Numerical defaults shared by the analysis modules.

The values here are the out-of-the-box tolerances; the engine block of the global
configuration and the per-run overrides take precedence wherever a caller passes them in.
"""
import math

DEFAULT_SEED = 20240229
DEFAULT_STATE_CAP = 65536
DEFAULT_HORIZON = 100_000

PROBABILITY_SUM_TOL = 1e-12
STOCHASTIC_ROW_TOL = 1e-12
STATIONARITY_TOL = 1e-10
PROJECTION_TOL = 1e-10
SYMMETRY_TOL = 1e-12
CLAMP_TOL = 1e-14
VERIFY_TOL = 1e-9

# Converse power check is exhaustive over permutations
MAX_CONVERSE_SITES = 5
# Beyond this many sites the scan suites sample permutations instead of enumerating them
MAX_EXHAUSTIVE_SITES = 5
SAMPLED_PERMUTATIONS = 20

SINGLE_PERMUTATION_CONSTANT = 10.0
CONCENTRATION_C_PRIME = 0.002
CONCENTRATION_MIN_SITES = 16
MIN_TRIALS = 100


def covering_cap(n: int) -> int:
    """Hard cap on the length of a sampled covering sequence."""
    return max(1, math.ceil(100 * n * math.log(n + 1)))
