"""Numerical constants and defaults for the filters."""

# Innovation covariances with a spectral condition number at or above this are refused.
CONDITION_LIMIT = 1e12

# EM second moments below -EM_NEGATIVE_TOLERANCE indicate a fault rather than round-off.
EM_NEGATIVE_TOLERANCE = 1e-9

# Inner NUV loop
DEFAULT_MAX_ITERS = 10
DEFAULT_CONV_TOL = 1e-6

# Chi-square gate
DEFAULT_CONFIDENCE = 0.95
QUANTILE_XTOL = 1e-10
