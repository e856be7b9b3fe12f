import numpy as np
import pytest
from scipy.integrate import quad
from scipy.spatial.distance import cdist

import frozen
from katonls import (
    Potential,
    PotentialAdmissibilityError,
    PotentialSpec,
    gaussian_well,
    kato_norm,
    kato_report,
    local_kato_modulus,
    make_grid,
    negative_part,
    sample_potential,
    weak_l32_profile,
    weak_l32_quasinorm,
)
from katonls.kernels import ResolventKernelSampler, convolve, equal_volume_radius, resolvent_cell_integral
from katonls.potentials import newton_potential


def bump(depth, width=2.0, center=(0.0, 0.0, 0.0)):
    return PotentialSpec("bump", depth=depth, width=width, center=center)


def brute_convolution(g, values, kernel, cell):
    """Pairwise sum over all nodes with an explicit self-cell value."""
    pts = np.argwhere(np.ones(g.shape, bool)) * g.spacing
    d = cdist(pts, pts)
    with np.errstate(divide="ignore"):
        K = kernel(d) * g.cell_volume
    np.fill_diagonal(K, cell)
    return (K @ values.ravel()).reshape(g.shape)


class TestSampling:
    def test_gaussian_values(self, grid16):
        V = sample_potential(gaussian_well(2.0), grid16)
        np.testing.assert_allclose(V.values, -2 * np.exp(-grid16.radius() ** 2))

    def test_sum_is_pointwise(self, grid32):
        a, b = bump(1.0, 2.0, (1.0, 0.0, 0.0)), bump(-0.5, 1.5, (-2.0, 1.0, 0.0))
        s = sample_potential(PotentialSpec("sum", children=(a, b)), grid32)
        np.testing.assert_allclose(s.values, sample_potential(a, grid32).values + sample_potential(b, grid32).values)

    def test_yukawa_small_box_rejected(self):
        with pytest.raises(PotentialAdmissibilityError, match="boundary"):
            sample_potential(PotentialSpec("yukawa", depth=1.0, decay=1.0), make_grid(16, 4.0))

    def test_bump_compact(self, grid32):
        V = sample_potential(bump(3.0, 2.0), grid32)
        assert np.all(V.values[grid32.radius() >= 2.0] == 0)
        assert V.values.min() == pytest.approx(-3.0)

    @pytest.mark.parametrize(
        "kw",
        [dict(kind="nope"), dict(kind="bump", width=0.0), dict(kind="yukawa", decay=-1.0), dict(kind="sum")],
    )
    def test_invalid_spec(self, kw):
        with pytest.raises(ValueError):
            PotentialSpec(**kw)

    def test_spec_round_trip(self):
        s = PotentialSpec("sum", children=(gaussian_well(2.0, 0.5, (1, 2, 3)), bump(1.0)))
        assert PotentialSpec.from_dict(s.to_dict()) == s

    def test_complex_rejected(self, grid16):
        with pytest.raises(ValueError):
            Potential(grid16, np.ones(grid16.shape, complex))


class TestKernels:
    def test_newton_matches_pairwise_sum(self):
        g = make_grid(8, 4.0)
        vals = np.abs(sample_potential(gaussian_well(1.0, 0.8), g, check=False).values)
        cell = 2 * np.pi * equal_volume_radius(g.spacing) ** 2
        want = brute_convolution(g, vals, lambda d: 1 / d, cell)
        np.testing.assert_allclose(newton_potential(Potential(g, vals)), want, rtol=1e-12)

    def test_resolvent_matches_pairwise_sum(self):
        g = make_grid(8, 4.0)
        vals = np.random.default_rng(0).random(g.shape)
        kappa = 1.3
        rh = equal_volume_radius(g.spacing)
        cell = quad(lambda r: r * np.exp(-kappa * r), 0, rh)[0]
        want = brute_convolution(g, vals, lambda d: np.exp(-kappa * d) / (4 * np.pi * d), cell)
        np.testing.assert_allclose(convolve(g, vals, "resolvent", kappa), want, rtol=1e-12)
        np.testing.assert_allclose(ResolventKernelSampler(g, -kappa**2).apply(vals), want, rtol=1e-12)

    def test_equal_volume_radius(self):
        assert 4 / 3 * np.pi * equal_volume_radius(0.7) ** 3 == pytest.approx(0.7**3)

    @pytest.mark.parametrize("kappa", [0.0, 1e-8, 0.5, 20.0])
    def test_resolvent_cell(self, kappa):
        rh = equal_volume_radius(0.3)
        want = quad(lambda r: r * np.exp(-kappa * r), 0, rh)[0]
        assert resolvent_cell_integral(0.3, kappa) == pytest.approx(want, rel=1e-9)

    def test_dense_symmetric(self):
        K = ResolventKernelSampler(make_grid(8, 4.0), -1.0).dense()
        np.testing.assert_allclose(K, K.T)
        assert np.all(K > 0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            convolve(make_grid(8, 1.0), np.ones((8, 8, 8)), "bogus")


class TestKatoNorm:
    def test_zero(self, grid16):
        assert kato_norm(Potential.zero(grid16)) == 0.0

    def test_gaussian_oracle(self):
        V = sample_potential(gaussian_well(2.0), make_grid(64, 20.0))
        assert kato_norm(V) == pytest.approx(2 * frozen.KATO_GAUSSIAN_PER_DEPTH, rel=0.01)

    def test_yukawa_capped_oracle(self):
        g = make_grid(96, 36.0)
        h = g.spacing
        V = sample_potential(PotentialSpec("yukawa", depth=1.0, decay=1.0), g)
        # at x = 0 the sampled profile is exp(-r)/max(r, h)
        want = 4 * np.pi * (quad(lambda r: np.exp(-r) * r / h, 0, h)[0] + np.exp(-h))
        assert kato_norm(V) == pytest.approx(want, rel=0.02)

    def test_homogeneity(self, grid32):
        V = sample_potential(gaussian_well(2.0), grid32)
        for c in (-3.0, 0.25, 7.0):
            assert kato_norm(V * c) == pytest.approx(abs(c) * kato_norm(V), rel=1e-10)

    def test_triangle_on_random_sums(self, grid32):
        r = np.random.default_rng(7)
        for _ in range(10):
            specs = [
                bump(r.uniform(-3, 3), r.uniform(1.0, 2.5), r.uniform(-2, 2, 3)),
                gaussian_well(r.uniform(-3, 3), r.uniform(0.5, 1.0), r.uniform(-1, 1, 3)),
            ]
            V1, V2 = (sample_potential(s, grid32) for s in specs)
            assert kato_norm(V1 + V2) <= kato_norm(V1) + kato_norm(V2) + 1e-8

    def test_refinement(self):
        a = kato_norm(sample_potential(gaussian_well(2.0), make_grid(48, 20.0)))
        b = kato_norm(sample_potential(gaussian_well(2.0), make_grid(96, 20.0)))
        assert abs(a - b) <= 0.02 * b

    def test_sup_at_center(self, grid32):
        V = sample_potential(gaussian_well(1.0), grid32)
        N = newton_potential(V)
        assert np.unravel_index(np.argmax(N), N.shape) == (16, 16, 16)


class TestLocalModulus:
    def test_zero(self, grid16):
        assert local_kato_modulus(Potential.zero(grid16), [1.0, 2.0]) == [0.0, 0.0]

    def test_under_resolved(self, grid16):
        with pytest.raises(ValueError, match="under-resolved"):
            local_kato_modulus(Potential.zero(grid16), [grid16.spacing])

    def test_bounded_bump_scales_like_r_squared(self, grid32):
        V = sample_potential(bump(1.0, 3.0), grid32)
        h = grid32.spacing
        radii = [2 * h, 3 * h]
        for r, m in zip(radii, local_kato_modulus(V, radii)):
            assert m == pytest.approx(2 * np.pi * r**2, rel=0.1)

    def test_inverse_square(self):
        g = make_grid(32, 8.0)
        h = g.spacing
        V = sample_potential(PotentialSpec("inverse_square_truncated", depth=-1.0, width=3.0), g)
        # radial integral of 1/max(r,h)^2 * 1/r over the ball of radius 0.5
        want = 2 * np.pi + 4 * np.pi * np.log(0.5 / h)
        assert local_kato_modulus(V, [0.5])[0] == pytest.approx(want, rel=0.05)

    def test_bounded_by_global(self, grid32):
        V = sample_potential(gaussian_well(3.0), grid32)
        g = kato_norm(V)
        assert all(m <= g + 1e-12 for m in local_kato_modulus(V, [0.8, 2.0, 5.0]))

    def test_monotone_in_radius(self, grid32):
        V = sample_potential(gaussian_well(3.0), grid32)
        m = local_kato_modulus(V, [0.6, 1.0, 2.0, 4.0])
        assert np.all(np.diff(m) >= 0)


class TestWeakL32:
    def test_zero(self, grid16):
        assert weak_l32_quasinorm(Potential.zero(grid16)) == 0.0

    def test_ball_indicator(self):
        g = make_grid(48, 4.0)
        V = Potential(g, np.where(g.radius() <= 1.0, 1.0, 0.0))
        assert weak_l32_quasinorm(V) == pytest.approx((4 * np.pi / 3) ** (2 / 3), rel=0.05)

    def test_inverse_square_flat_profile(self):
        g = make_grid(32, 8.0)
        V = sample_potential(PotentialSpec("inverse_square_truncated", depth=-1.0, width=3.0), g)
        lam, prof = weak_l32_profile(V)
        # level sets are balls of radius lam^{-1/2}; resolved between 4h and 0.8 * width
        ok = (lam >= 1 / (0.8 * 3.0) ** 2) & (lam <= 1 / (4 * g.spacing) ** 2)
        assert ok.sum() >= 10
        np.testing.assert_allclose(prof[ok], (4 * np.pi / 3) ** (2 / 3), rtol=0.05)

    def test_homogeneity(self, grid32):
        V = sample_potential(gaussian_well(2.0), grid32)
        assert weak_l32_quasinorm(V * -2.5) == pytest.approx(2.5 * weak_l32_quasinorm(V), rel=1e-12)


class TestNegativePart:
    def test_repulsive_has_none(self, grid16):
        assert negative_part(sample_potential(gaussian_well(-1.0), grid16)).is_zero

    def test_gaussian(self, grid16):
        Vm = negative_part(sample_potential(gaussian_well(2.0), grid16))
        np.testing.assert_allclose(Vm.values, 2 * np.exp(-grid16.radius() ** 2))

    def test_depth_1_9_below_threshold(self):
        V = sample_potential(gaussian_well(1.9), make_grid(64, 20.0))
        k = kato_norm(negative_part(V))
        assert k == pytest.approx(1.9 * frozen.KATO_GAUSSIAN_PER_DEPTH, rel=0.01)
        assert k < 4 * np.pi

    def test_depth_2_at_threshold(self):
        rep = kato_report(sample_potential(gaussian_well(2.0), make_grid(64, 20.0)))
        assert rep.negative_part_norm == pytest.approx(4 * np.pi, rel=0.01)


class TestKatoReport:
    def test_invariants(self, grid32):
        V = sample_potential(PotentialSpec("sum", children=(gaussian_well(2.0), bump(-1.0, 2.0, (1, 1, 0)))), grid32)
        rep = kato_report(V)
        radii = [r for r, _ in rep.local_modulus]
        vals = [m for _, m in rep.local_modulus]
        assert radii == sorted(radii, reverse=True)
        assert np.all(np.diff(vals) <= 0)
        assert 0 <= rep.negative_part_norm <= rep.global_norm
        assert rep.weak_l32 > 0
        d = rep.to_dict()
        assert set(d) >= {"global_norm", "local_modulus", "negative_part_norm", "weak_l32"}

    def test_zero_report(self, grid16):
        rep = kato_report(Potential.zero(grid16))
        assert rep.global_norm == rep.negative_part_norm == rep.weak_l32 == 0
        assert rep.form_positive
