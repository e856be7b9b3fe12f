"""Distorted versus standard Sobolev norms across two resolutions."""

from katonls import find_form_constant, gaussian_well, make_grid, norm_equivalence_scan, sample_potential

for n in (32, 64):
    V = sample_potential(gaussian_well(2.0), make_grid(n, 12.0))
    rep = norm_equivalence_scan(V, find_form_constant(V), 1.0, 2.0, 50, seed=6)
    print(f"n={n}: ratio range [{rep.ratio_min:.4f}, {rep.ratio_max:.4f}], spread {rep.spread:.4f}")
