import math

import numpy as np

FOUR_PI = 4.0 * math.pi
SQRT_FOUR_PI = math.sqrt(FOUR_PI)

# Below this sin(theta) a direction is treated as a pole and gets phi = 0
POLE_EPS = 1e-14

# Chordal distance under which two points on the sphere are the same node
ORBIT_TOL = 1e-9

# Weights closer than this are grouped when counting multiplicities
WEIGHT_GROUP_TOL = 1e-12

ALPHA = (math.sqrt(5.0) - 1.0) / 2.0

# Icosahedron fixed by the rotation group, (+-1, 0, +-a) and cyclic shifts
ICOSAHEDRON_VERTICES = np.array(
    [[sx, 0.0, sz * ALPHA] for sx in (1.0, -1.0) for sz in (1.0, -1.0)]
    + [[sx * ALPHA, sy, 0.0] for sx in (1.0, -1.0) for sy in (1.0, -1.0)]
    + [[0.0, sy * ALPHA, sz] for sy in (1.0, -1.0) for sz in (1.0, -1.0)]
)

GROUP_ORDER = 60

ORBIT_SIZES = {
    "vertex": 12,
    "face": 20,
    "edge": 30,
    "generic": 60,
}

ORBIT_DOF = {
    "vertex": 1,
    "face": 1,
    "edge": 1,
    "generic": 3,
}

RULE_KINDS = ("riqs20", "trapezoid_trapezoid", "gauss_legendre_trapezoid", "custom")

RULE_FILE_MAGIC = "sphquad-rule v1"

# Henyey-Greenstein benchmark integrand
HG_AXIS = (1.0 / 9.0, 4.0 / 9.0, 8.0 / 9.0)
HG_G = 0.5

WEIGHT_BAND = (4.4e-3, 7.0e-3)

FACES = ("x-", "x+", "y-", "y+", "z-", "z+")

DEFAULT_OPTIONS = {
    "SEED": 0,
    "RESTARTS": 16,
    "MAX_ITERS": 200,  # Gauss-Newton iterations per continuation step
    "RESIDUAL_TOL": 1e-12,
    "STEP_TOL": 1e-14,
    "EXACTNESS_TOL": 1e-10,
    "LADDER_START": 5,
    "LADDER_STEP": 6,
    "RTE_TOL": 1e-8,
    "RTE_MAX_ITERS": 5000,
    "MAX_UNKNOWNS": 10**8,
    "DIVERGENCE_WINDOW": 10,
    "CHECK_TOL": 1e-8,
    "LOG_LEVEL": "INFO",
}
