"""Heat semigroup and fractional powers of H + a."""

import numpy as np

from katonls import fractional_power_apply, gaussian_well, heat_apply, lp_norm, make_grid, random_field, sample_potential, spectral_data

g = make_grid(32, 12.0)
V = sample_potential(gaussian_well(10.0), g)
spec = spectral_data(V, resonance=False)
a = spec.form_constant
f = random_field(g, np.random.default_rng(3))

print("semigroup error:", lp_norm(heat_apply(V, 0.5, f) - heat_apply(V, 0.2, heat_apply(V, 0.3, f)), np.inf))
up = fractional_power_apply(V, a, 1.0, f, spec)
print("(H+a)^(-1/2) (H+a)^(1/2) f - f:", lp_norm(fractional_power_apply(V, a, -1.0, up, spec) - f, 2))
lam, psi = spec.eigenpairs[0]
for s in (-1.0, 0.5, 1.5):
    err = lp_norm(fractional_power_apply(V, a, s, psi, spec) - psi * (1 + a + lam) ** (s / 2), 2)
    print(f"eigenvector check s={s:+.1f}: {err:.2e}")
