import math

import numpy as np
import pytest

from sqglab.corpus import band_limited_field, block_field, random_field, single_mode
from sqglab.dyadic import build_family
from sqglab.errors import ConfigurationError, DomainError
from sqglab.fractional import (
    SemigroupSpec,
    analytic_c_alpha,
    calibrate_c_alpha,
    commutator_frac_composition,
    compose_spectral,
    frac_laplacian_singular_integral,
    frac_laplacian_spectral,
    semigroup_decay_fit,
    semigroup_kernel_l1,
    semigroup_spectral,
    vishik_block_transfer,
    vishik_reference,
)
from sqglab.maps import MeasurePreservingMap
from sqglab.spectral import Grid, forward, inverse, lp_norm, to_physical


class TestFractionalLaplacian:
    def test_spectral_on_single_mode(self, grid32):
        u = forward(single_mode(grid32, (2, 0)))
        out = inverse(frac_laplacian_spectral(u, 0.5))
        np.testing.assert_allclose(out.values, 2.0 ** 0.5 * single_mode(grid32, (2, 0)).values, atol=1e-12)

    def test_singular_integral_range(self, grid32):
        with pytest.raises(DomainError, match="0 < alpha < 1"):
            frac_laplacian_singular_integral(single_mode(grid32, (1, 0)), 1.2, 1.0)

    def test_singular_integral_kills_constants(self, grid32):
        u = single_mode(grid32, (0, 0), kind="cos")
        out = frac_laplacian_singular_integral(u, 0.5, 1.0)
        assert np.abs(out.values).max() < 1e-9

    def test_analytic_constant(self):
        a = 0.5
        expected = 2 ** a * math.gamma(1 + a / 2) / (math.pi * abs(math.gamma(-a / 2)))
        assert analytic_c_alpha(2, a) == pytest.approx(expected, rel=1e-14)

    def test_calibration_generalises(self, grid64):
        rng = np.random.Generator(np.random.Philox(7))
        fields = [band_limited_field(grid64, rng, 6.0, 8.0) for _ in range(4)]
        cal = calibrate_c_alpha(fields, 0.5)
        assert cal.c_alpha > 0
        assert 0.5 < cal.c_alpha / cal.analytic < 2.0
        assert cal.fit_residual < 0.25
        assert cal.discrepancy(band_limited_field(grid64, rng, 6.0, 8.0)) < 0.25

    def test_calibration_needs_fields(self):
        with pytest.raises(ConfigurationError, match="at least one"):
            calibrate_c_alpha([], 0.5)


class TestSemigroup:
    def test_spec_validation(self):
        with pytest.raises(ConfigurationError, match="nonnegative"):
            SemigroupSpec(0.5, -1.0)
        with pytest.raises(ConfigurationError, match="order"):
            SemigroupSpec(2.5, 1.0)

    def test_single_mode_decay(self, grid32):
        u = forward(single_mode(grid32, (3, 4)))
        out = semigroup_spectral(u, SemigroupSpec(0.5, 2.0))
        for p in (1.0, 2.0, math.inf):
            ratio = lp_norm(inverse(out), p) / lp_norm(inverse(u), p)
            assert ratio == pytest.approx(math.exp(-2.0 * 5.0 ** 0.5), rel=1e-12)

    def test_semigroup_law(self, grid32, rng):
        u = random_field(grid32, rng)
        twice = semigroup_spectral(semigroup_spectral(u, SemigroupSpec(0.8, 0.2)), SemigroupSpec(0.8, 0.3))
        once = semigroup_spectral(u, SemigroupSpec(0.8, 0.5))
        np.testing.assert_allclose(twice.coeffs, once.coeffs, atol=1e-15)

    def test_decay_fit_of_a_mode(self, grid32):
        """A mode at |k| = 2^q decays like exp(-t 2^{q alpha}) exactly: c = C = 1."""
        u = forward(single_mode(grid32, (4, 0), kind="cos"))
        fit = semigroup_decay_fit(u, 0.5, 2, np.linspace(0.0, 2.0, 9))
        assert fit.c == pytest.approx(1.0, rel=1e-9)
        assert fit.C == pytest.approx(1.0, rel=1e-9)
        assert fit.rate == pytest.approx(2.0, rel=1e-9)

    def test_decay_fit_on_ring_data(self, grid64, fam64, rng):
        block = block_field(grid64, fam64, rng, 2)
        fit = semigroup_decay_fit(block, 0.5, 2, np.linspace(0.0, 2.0, 12))
        assert fit.c > 0

    def test_kernel_l1_is_monotone(self, fam32):
        ts = np.linspace(0.0, 2.0, 6)
        vals = [semigroup_kernel_l1(SemigroupSpec(0.5, float(t)), 1, fam32, aux_n=64) for t in ts]
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
        assert vals[-1] < vals[0]

    def test_kernel_grid_resolution(self, fam32):
        with pytest.raises(ConfigurationError, match="resolve"):
            semigroup_kernel_l1(SemigroupSpec(0.5, 1.0), 1, fam32, aux_n=16, aux_length=64 * math.pi)


class TestCommutators:
    def test_isometries_commute(self, grid32, rng):
        u = inverse(random_field(grid32, rng, k_max=5.0))
        for psi in (
            MeasurePreservingMap.identity(),
            MeasurePreservingMap.translation((0.3, 0.7)),
            MeasurePreservingMap.rotation(0.5 * math.pi),
        ):
            lhs, _ = commutator_frac_composition(u, psi, 0.5)
            assert lhs <= 1e-9 * lp_norm(u, 2.0)

    def test_shear_bound_is_positive(self, grid32, rng):
        u = inverse(random_field(grid32, rng, k_max=5.0))
        lhs, bound = commutator_frac_composition(u, MeasurePreservingMap.shear(0, 0.2), 0.5)
        assert lhs > 0 and bound > 0

    def test_alpha_range(self, grid32):
        with pytest.raises(DomainError, match="alpha"):
            commutator_frac_composition(single_mode(grid32, (1, 0)), MeasurePreservingMap.identity(), 1.5)

    def test_compose_spectral_identity_is_a_copy(self, sin_y):
        out = compose_spectral(sin_y, MeasurePreservingMap.identity())
        assert out.coeffs is not sin_y.coeffs
        np.testing.assert_array_equal(out.coeffs, sin_y.coeffs)


class TestBlockTransfer:
    def test_identity_blocks(self, fam32, grid32, rng):
        f = random_field(grid32, rng, k_max=grid32.n / 3)
        ident = MeasurePreservingMap.identity()
        q = 2
        diag = vishik_block_transfer(f, ident, q, q, fam32)
        block = lp_norm(to_physical(fam32.block_symbol(q) * f.coeffs, grid32), 2.0, grid32)
        assert diag <= block * (1 + 1e-12)
        for j in (q - 3, q - 2, q + 2, q + 3):
            assert vishik_block_transfer(f, ident, j, q, fam32) == 0.0

    def test_reference_scaling(self, fam32, grid32, rng):
        f = random_field(grid32, rng, k_max=10.0)
        psi = MeasurePreservingMap.shear(0, 0.1)
        near = vishik_reference(f, psi, 3, 2, fam32)
        far = vishik_reference(f, psi, 4, 2, fam32)
        assert far == pytest.approx(0.5 * near)

    def test_shear_transfer_decays(self):
        grid = Grid(64)
        fam = build_family(grid)
        rng = np.random.Generator(np.random.Philox(3))
        f = random_field(grid, rng, k_max=20.0, slope=0.5)
        psi = MeasurePreservingMap.shear(0, 0.15)
        q = 3
        near = vishik_block_transfer(f, psi, q + 1, q, fam)
        far = vishik_block_transfer(f, psi, q + 3, q, fam)
        assert far < near
