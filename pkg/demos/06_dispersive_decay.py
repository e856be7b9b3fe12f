"""Sup-norm decay of the linear flow, free and with a shallow well (about 40 s)."""

import numpy as np

from katonls import Field, Potential, dispersive_decay_fit, gaussian_well, make_grid, sample_potential, spectral_data

g = make_grid(128, 40.0)
data = Field.from_function(g, lambda x, y, z: np.exp(-(x * x + y * y + z * z) / 0.85**2))
times = np.linspace(0.5, 4.0, 15)

free = dispersive_decay_fit(Potential.zero(g), None, data, times, dt=0.25)
print(f"free: fitted exponent {free.exponent:.4f}")

V = sample_potential(gaussian_well(2.0), g)
well = dispersive_decay_fit(V, spectral_data(V, resonance=False), data, times, dt=0.05)
print(f"depth-2 well: fitted exponent {well.exponent:.4f} (slower, the well is close to a zero-energy resonance)")
