"""Numerical tolerances and model constants, fixed in one place for reproducibility."""

import numpy as np

# irrational drive-frequency ratio; gamma**2 == 1 - gamma
GOLDEN_RATIO = (np.sqrt(5.0) - 1.0) / 2.0

# matrix / state contracts
HERMITICITY_TOL = 1e-12
UNITARITY_TOL = 1e-10
STATE_NORM_TOL = 1e-10
ORTHONORMALITY_TOL = 1e-10
EIG_RESIDUAL_TOL = 1e-9
EXPECTATION_IMAG_TOL = 1e-10

# dynamics
NORM_DRIFT_TOL = 1e-6
DEGENERATE_STATE_TOL = 1e-9

# topology
BAND_DEGENERACY_TOL = 1e-6
DEFAULT_GRID_N = 64
DEFAULT_BOUNDARY_TOL = 1e-3
CHERN_INTEGER_TOL = 1e-6
