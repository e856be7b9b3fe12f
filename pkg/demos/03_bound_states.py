"""Bound states, continuous projection and the zero-energy resonance indicator."""

import numpy as np

from katonls import continuous_projection, gaussian_well, lp_norm, make_grid, random_field, resonance_indicator, sample_potential, spectral_data

g = make_grid(32, 12.0)
for depth in (5.0, 10.0, 20.0):
    spec = spectral_data(sample_potential(gaussian_well(depth), g), resonance=False)
    print(f"depth {depth:4.1f}: {spec.count} bound state(s), energies {np.round(spec.eigenvalues, 5)}")

spec = spectral_data(sample_potential(gaussian_well(10.0), g), resonance=False)
f = random_field(g, np.random.default_rng(0))
pf = continuous_projection(spec, f)
print("P_c idempotence error:", lp_norm(continuous_projection(spec, pf) - pf, 2))

for depth in (2.0, 2.6, 2.7, 2.8, 3.5):
    ind = resonance_indicator(sample_potential(gaussian_well(depth), g))
    print(f"depth {depth:4.2f}: resonance indicator {ind}")
