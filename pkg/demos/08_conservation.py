"""Mass and energy conservation for defocusing cubic NLS with a well (about 20 s)."""

import numpy as np

from katonls import Field, conservation_report, evolve, find_form_constant, gaussian_well, h1_bound_check, make_grid, sample_potential

g = make_grid(32, 12.0)
V = sample_potential(gaussian_well(2.0), g)
u0 = Field.from_function(g, lambda x, y, z: np.exp(-(x * x + y * y + z * z)))
a = find_form_constant(V)
for dt in (1e-3, 5e-4):
    trace = evolve(V, u0, 2.0, dt, -1, n_slices=21)
    dm, de = conservation_report(trace)
    print(f"dt={dt:g}: mass drift {dm:.1e}, energy drift {de:.1e}, H1 bound {h1_bound_check(trace, V, a)}")
