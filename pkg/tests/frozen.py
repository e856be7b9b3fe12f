"""Oracle values frozen from tests/oracles.py.

Each constant is re-derived by ``test_oracles.py`` so that a change in an oracle
is caught rather than silently absorbed.
"""

import numpy as np

# Depth at which the well -depth*exp(-r^2) binds its first s-state.
CRITICAL_DEPTH = 2.6840046509

# Radial finite-difference levels (R = 30, N = 12000) of -depth*exp(-r^2).
S_WAVE = {
    5.0: (-0.40612235,),
    10.0: (-2.54340883,),
    20.0: (-8.56122527, -0.12240716),
}
P_WAVE = {20.0: (-2.56573722,)}

# Per unit depth the Kato norm of exp(-r^2) is 4*pi int_0^inf exp(-r^2) r dr.
KATO_GAUSSIAN_PER_DEPTH = 2 * np.pi

# Free heat kernel constants of exp(t Delta).
HEAT_A1 = (4 * np.pi) ** -1.5
HEAT_A2 = 0.25
