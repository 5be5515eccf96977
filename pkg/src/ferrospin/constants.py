"""Central tolerances and desk-scale caps.

Single tuning point: every module imports its numeric tolerances from here
rather than hard-coding them at use sites.
"""

import math

# tolerances
STATIONARITY_TOL = 1e-10     # ||mu P - mu||_1 for every exact kernel
BALANCE_TOL = 1e-12          # entrywise detailed-balance check
PROB_SUM_TOL = 1e-12         # distribution tables / matrix rows sum to 1
REL_TOL = 1e-12              # generic relative comparisons (dual routes)
INEQUALITY_SLACK = 1e-9      # spectral / mixing inequality slack
POTENTIAL_SLACK = 1e-10      # dominance and decay-factor grid slack
QUADRATURE_ABS_TOL = 1e-10   # adaptive Simpson absolute tolerance
SAW_ORACLE_TOL = 1e-9        # saw marginal vs brute force

# enumeration caps
VECTOR_LIMIT = 20            # 2^n probability vectors
MATRIX_LIMIT = 12            # dense 2^n x 2^n transition matrices
BLOCK_ENUM_LIMIT = 20        # exact conditional resampling of one block
FIELD_KERNEL_LIMIT = 6       # exact field-dynamics kernel (3^n subset work)
SAW_DEPTH_CAP = 30           # lazy probe builds
REGION_NODE_CAP = 10**6      # verification walks over SAW trees
MIXING_STEP_CAP = 10**6      # exact mixing-time iteration cap

# defaults
DEFAULT_EPS = 1.0 / (4.0 * math.e)
DEFAULT_C_D = 4.0
DEFAULT_BURNIN_MULTIPLIER = 10
ASSM_TARGET = 1.0 / 20.0
WILSON_Z = 2.5758293035489004  # two-sided 99% normal quantile
