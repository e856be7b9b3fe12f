"""Form constant, Birman-Schwinger norm and the quadratic-form sandwich."""

from katonls import (
    birman_schwinger_norm,
    find_form_constant,
    gaussian_well,
    gradient_norm_squared,
    lp_norm,
    make_grid,
    quadratic_form,
    sample_potential,
)
from katonls.funcalc import field_ensemble

g = make_grid(32, 12.0)
fields = field_ensemble(g, 20, seed=1)
for depth in (2.0, 5.0, 20.0):
    V = sample_potential(gaussian_well(depth), g)
    a = find_form_constant(V)
    ratios = [quadratic_form(V, u) / (gradient_norm_squared(u) + a * lp_norm(u, 2) ** 2) for u in fields]
    print(f"depth {depth:4.1f}: a = {a:7.3f}  BS norm = {birman_schwinger_norm(V, a):.4f}  q/(|grad u|^2 + a|u|^2) in [{min(ratios):.3f}, {max(ratios):.3f}]")
