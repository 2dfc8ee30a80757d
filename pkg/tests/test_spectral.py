import math

import numpy as np
import pytest

from sqglab.corpus import random_field, single_mode
from sqglab.errors import ConfigurationError, DomainError, UnsupportedScaleError
from sqglab.spectral import (
    Grid,
    Multiplier,
    PhysicalField,
    SpectralField,
    apply_multiplier,
    dealias,
    divergence,
    forward,
    frac_power,
    gradient,
    inverse,
    inverse_abs,
    lp_norm,
    rescale,
    riesz,
    riesz_velocity,
    velocity_gradient_sup,
)


class TestGrid:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ConfigurationError, match="power of two"):
            Grid(48)

    def test_rejects_tiny_grid(self):
        with pytest.raises(ConfigurationError, match="power of two >= 16"):
            Grid(8)

    def test_rejects_nonpositive_length(self):
        with pytest.raises(ConfigurationError, match="length"):
            Grid(32, 0.0)

    def test_lattice_extent(self, grid32):
        """k_min is 2 pi / L and k_max the corner of the lattice."""
        assert grid32.k_min == pytest.approx(1.0)
        assert grid32.k_max == pytest.approx(16.0 * math.sqrt(2.0))
        assert grid32.indices[0].min() == -16 and grid32.indices[0].max() == 15

    def test_dealias_mask_keeps_two_thirds(self, grid32):
        # |i| < 32/3 keeps -10..10 on each axis
        assert int(grid32.dealias_mask.sum()) == 21 * 21


class TestTransforms:
    def test_forward_normalisation(self, grid32):
        """coeff(k) is the mean of u exp(-i k.x)."""
        u = forward(single_mode(grid32, (2, 0), 3.0, "cos"))
        assert u.coeffs[2, 0] == pytest.approx(1.5)
        assert u.coeffs[-2, 0] == pytest.approx(1.5)

    def test_round_trip(self, grid32, rng):
        u = random_field(grid32, rng)
        back = forward(inverse(u))
        np.testing.assert_allclose(back.coeffs, u.coeffs, atol=1e-14)

    @pytest.mark.parametrize("n", [32, 64, 128])
    def test_physical_round_trip(self, n, rng):
        grid = Grid(n)
        for _ in range(20):
            values = rng.standard_normal(grid.shape)
            back = inverse(forward(PhysicalField(grid, values))).values
            np.testing.assert_allclose(back, values, atol=1e-12)

    def test_real_input_gives_hermitian_coefficients(self, grid32, rng):
        c = forward(PhysicalField(grid32, rng.standard_normal(grid32.shape))).coeffs
        # c[-k] sits at index (n - i) mod n
        mirrored = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
        np.testing.assert_allclose(c, np.conj(mirrored), atol=1e-15)

    @pytest.mark.parametrize("n, mode", [(32, (0, 1)), (64, (3, 5))])
    def test_roundoff_mean_is_snapped_to_zero(self, n, mode):
        u = forward(single_mode(Grid(n), mode))
        assert u.mean == 0
        assert u.mean_zero

    def test_genuine_mean_is_kept(self, grid32, sin_y):
        values = inverse(sin_y).values + 1e-6
        assert forward(PhysicalField(grid32, values)).mean == pytest.approx(1e-6, rel=1e-9)

    def test_physical_rejects_nan(self, grid16):
        vals = np.zeros(grid16.shape)
        vals[0, 0] = np.nan
        with pytest.raises(DomainError, match="NaN"):
            PhysicalField(grid16, vals)

    def test_shape_mismatch(self, grid16):
        with pytest.raises(ConfigurationError, match="do not match"):
            SpectralField(grid16, np.zeros((8, 8)))


class TestMultipliers:
    def test_frac_power_kills_zero_mode(self, grid16):
        vals = frac_power(0.5).values(grid16)
        assert vals[0, 0] == 0
        assert vals[3, 4] == pytest.approx(5.0 ** 0.5)

    def test_mean_zero_only_refuses_mean(self, grid16):
        u = SpectralField(grid16, np.ones(grid16.shape))
        with pytest.raises(DomainError, match="mean-zero"):
            apply_multiplier(u, inverse_abs())

    def test_undeclared_singular_symbol(self, grid16):
        bad = Multiplier(lambda ks: 1.0 / np.sqrt(ks[0] ** 2 + ks[1] ** 2), "bad")
        with pytest.raises(DomainError, match="singular"):
            bad.values(grid16)

    def test_riesz_velocity_of_sin_y(self, grid32, sin_y):
        """v = (-R2 theta, R1 theta) = (-cos y, 0) for theta = sin y."""
        v1, v2 = riesz_velocity(sin_y)
        _, y = grid32.coordinates()
        np.testing.assert_allclose(inverse(v1).values, -np.cos(y), atol=1e-12)
        np.testing.assert_allclose(inverse(v2).values, 0.0, atol=1e-12)

    def test_riesz_velocity_straight_from_forward(self, grid64):
        """No mean cleanup is needed between forward and the velocity."""
        theta = forward(single_mode(grid64, (3, 5)))
        v1, v2 = riesz_velocity(theta)
        assert np.abs(divergence((v1, v2)).coeffs).max() < 1e-12

    def test_multiplier_is_linear(self, grid32, rng):
        u = random_field(grid32, rng)
        w = random_field(grid32, rng)
        m = frac_power(0.7)
        lhs = apply_multiplier(u * 2.0 - w * 3.0, m)
        rhs = apply_multiplier(u, m) * 2.0 - apply_multiplier(w, m) * 3.0
        np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-13)

    def test_riesz_transforms_contract_l2(self, grid32, rng):
        theta = random_field(grid32, rng)
        r1 = apply_multiplier(theta, riesz(1)).l2_norm()
        r2 = apply_multiplier(theta, riesz(2)).l2_norm()
        base = theta.l2_norm()
        assert r1 <= base * (1 + 1e-12)
        assert r2 <= base * (1 + 1e-12)
        # R1^2 + R2^2 = -1 on mean-free fields
        assert r1 ** 2 + r2 ** 2 == pytest.approx(base ** 2, rel=1e-12)

    def test_riesz_velocity_is_divergence_free(self, grid32, rng):
        v = riesz_velocity(random_field(grid32, rng))
        assert np.abs(divergence(v).coeffs).max() < 1e-12

    def test_riesz_velocity_needs_mean_zero(self, grid16):
        u = SpectralField(grid16, np.ones(grid16.shape))
        with pytest.raises(DomainError, match="mean-zero"):
            riesz_velocity(u)

    def test_gradient_of_sin_x(self, grid32):
        x, _ = grid32.coordinates()
        gx, gy = gradient(forward(single_mode(grid32, (1, 0))))
        np.testing.assert_allclose(inverse(gx).values, np.cos(x), atol=1e-12)
        np.testing.assert_allclose(inverse(gy).values, 0.0, atol=1e-12)

    def test_dealias_truncates(self, grid32):
        u = forward(single_mode(grid32, (12, 0)))
        assert np.abs(dealias(u).coeffs).max() < 1e-14


class TestNorms:
    def test_lp_norms_of_sin_y(self, grid32):
        u = single_mode(grid32, (0, 1))
        assert lp_norm(u, 2.0) == pytest.approx(math.pi * math.sqrt(2.0), rel=1e-12)
        assert lp_norm(u, math.inf) == pytest.approx(1.0, rel=1e-12)
        # |sin| has kinks on the grid, so L^1 quadrature is only first-order accurate here
        assert lp_norm(u, 1.0) == pytest.approx(8.0 * math.pi, rel=5e-3)

    def test_parseval(self, grid32, rng):
        u = random_field(grid32, rng)
        assert u.l2_norm() == pytest.approx(lp_norm(inverse(u), 2.0), rel=1e-12)

    def test_bare_array_needs_grid(self):
        with pytest.raises(ConfigurationError, match="needs the grid"):
            lp_norm(np.zeros((16, 16)), 2.0)

    def test_velocity_gradient_sup_of_shear(self, grid32):
        """grad v = [[0, cos y], [0, 0]] has operator norm |cos y| <= 1."""
        v1 = forward(single_mode(grid32, (0, 1)))
        assert velocity_gradient_sup(v1, SpectralField.zeros(grid32)) == pytest.approx(1.0, rel=1e-12)


class TestRescale:
    def test_upward_scaling(self, grid32):
        alpha = 0.5
        u = single_mode(grid32, (1, 0))
        out = rescale(u, 2.0, alpha)
        expected = 2.0 ** (alpha - 1.0) * single_mode(grid32, (2, 0)).values
        np.testing.assert_allclose(out.values, expected, atol=1e-12)

    def test_downward_scaling(self, grid32):
        alpha = 0.5
        u = single_mode(grid32, (2, 0))
        out = rescale(u, 0.5, alpha)
        expected = 0.5 ** (alpha - 1.0) * single_mode(grid32, (1, 0)).values
        np.testing.assert_allclose(out.values, expected, atol=1e-12)

    def test_not_power_of_two(self, grid32):
        with pytest.raises(UnsupportedScaleError, match="power of two"):
            rescale(single_mode(grid32, (1, 0)), 3.0, 0.5)

    def test_past_nyquist(self, grid32):
        with pytest.raises(UnsupportedScaleError, match="Nyquist"):
            rescale(single_mode(grid32, (8, 0)), 2.0, 0.5)

    def test_downward_needs_divisible_modes(self, grid32):
        with pytest.raises(UnsupportedScaleError, match="divisible"):
            rescale(single_mode(grid32, (3, 0)), 0.5, 0.5)

    def test_dropped_modes_are_logged(self, grid32, log_records):
        tiny = 1e-15 * single_mode(grid32, (3, 0)).values
        u = PhysicalField(grid32, single_mode(grid32, (1, 0)).values + tiny)
        out = rescale(u, 2.0, 0.5)
        expected = 2.0 ** -0.5 * single_mode(grid32, (2, 0)).values
        np.testing.assert_allclose(out.values, expected, atol=1e-12)
        dropped = [r for r in log_records if r["message"].startswith("rescale by 2 drops")]
        assert dropped and dropped[0]["level"].name == "DEBUG"
