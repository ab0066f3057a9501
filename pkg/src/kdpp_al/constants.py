"""Numerical tolerances shared across modules."""

# symmetric eigensolver / PSD handling
SYMMETRY_TOL = 1e-10
EIG_NEGATIVE_TOL = 1e-8     # relative to max(1, |lambda|_max)
EIG_ZERO_TOL = 1e-10        # relative to max(1, |lambda|_max)
QL_MAX_SWEEPS = 60

# Gram-Schmidt
GS_TOL = 1e-12

# determinants of PSD matrices
DET_PIVOT_TOL = 1e-12       # relative to the largest diagonal entry

# elementary symmetric polynomials
ESP_LOG_THRESHOLD = 1e250

# GLAD
SIGMA_CAP = 1.0 - 1e-12
SIMPLEX_TOL = 1e-6

# representativeness / kernels
ZERO_VECTOR_EPS = 1e-12
SIGMA_FLOOR = 1e-12

# committee scores for a class missing from a one-vs-rest training set
ABSENT_CLASS_SCORE = -1e12
