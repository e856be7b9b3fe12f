"""Picard iteration for the Duhamel formulation, checked against split-step evolution."""

import numpy as np

from katonls import Field, NonContractionError, PicardConfig, Potential, evolve, make_grid, picard_solve

g = make_grid(32, 12.0)
V = Potential.zero(g)
u0 = Field.from_function(g, lambda x, y, z: 0.1 * np.exp(-(x * x + y * y + z * z)))
cfg = PicardConfig(0.1, n_t=11)

trace, ratios = picard_solve(V, None, u0, cfg, -1)
print("contraction ratios:", " ".join(f"{r:.1e}" for r in ratios))
print("distance to split-step:", trace.sup_l2_distance(evolve(V, u0, 0.1, 1e-4, -1, n_slices=11)))

for scale in (20, 50):
    try:
        _, r = picard_solve(V, None, u0 * scale, cfg, -1)
        print(f"{scale}x data: contracts, worst ratio {max(r):.3f}")
    except NonContractionError as exc:
        print(f"{scale}x data: {exc}")
