"""Kato norm of a Gaussian well and its local modulus."""

import numpy as np

from katonls import gaussian_well, kato_norm, kato_report, make_grid, sample_potential

g = make_grid(64, 20.0)
for depth in (1.0, 2.0, 5.0):
    V = sample_potential(gaussian_well(depth), g)
    print(f"depth {depth:4.1f}: Kato norm {kato_norm(V):8.4f}  (2 pi * depth = {2 * np.pi * depth:8.4f})")

print(kato_report(sample_potential(gaussian_well(2.0), g)).to_dict())
