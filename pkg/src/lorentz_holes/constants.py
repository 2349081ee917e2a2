"""Numerical tolerances shared by every module (all arithmetic is float64)."""

# Quadratic discriminant below which a ray/disk contact is a tangency, not a hit.
TANGENT_DISCRIMINANT = 1e-12

# Flights shorter than this are the departure point itself.
MIN_FLIGHT = 1e-12

# Unit-velocity check.
SPEED_TOL = 1e-12

# Geometric comparisons of disk sets (symmetry, fixture equality).
GEOMETRY_TOL = 1e-12

# Relative slack added to the swept maximal free path before it is used as a bound.
HORIZON_SAFETY = 1e-3

# Free-flight search reports a bug when a flight exceeds the bound by this factor.
HORIZON_OVERSHOOT = 1.0 + 1e-6

# Angular / offset resolution of the finite-horizon sweep.
HORIZON_DIRECTIONS = 10_000
HORIZON_OFFSETS = 10_000

# Largest Poisson-binomial size handled by the exact convolution.
LE_CAM_MAX_SIZE = 10_000

# Uncounted wall events tolerated between two counted collisions.
WALL_CHATTER_LIMIT = 1_000

# Minimum sample sizes: KS machinery, and moment estimators.
MIN_KS_SAMPLES = 50
MIN_ESTIMATOR_SAMPLES = 2
