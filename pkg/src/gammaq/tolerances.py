"""Central numeric tolerances and resource limits.

All modules share these constants so that test thresholds and runtime
guards stay in one place.
"""

# Identities that hold by construction (permutations, exact linear algebra).
EXACT_TOL = 1e-12

# Identities composed from several floating-point operations.
COMPOSED_TOL = 1e-10

# Coefficient pruning threshold applied after symbolic arithmetic.
PRUNE_TOL = 1e-14

# Target relative accuracy of the iterative (matrix-free) spectral norm.
NORM_RTOL = 1e-9

# Required relative agreement between the dense and matrix-free norm engines.
ENGINE_AGREE_RTOL = 1e-8

# Largest kappa**N handled by dense linear algebra (configurable per call).
DENSE_DIM_LIMIT = 4096

# Iteration cap for the power-iteration norm solver.
POWER_ITER_CAP = 10000

# Largest number of word factors materialized densely per composition sum.
WORD_FACTOR_CAP = 4
