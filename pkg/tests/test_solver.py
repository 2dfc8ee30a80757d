import math

import numpy as np
import pytest

from sqglab.corpus import random_field, single_mode
from sqglab.dyadic import low_pass
from sqglab.errors import BlowupError, CFLViolation, ConfigurationError, DomainError
from sqglab.solver import (
    SchemeState,
    SolverConfig,
    TrajectoryRecord,
    constant_forcing,
    initial_state,
    nonlinear_term,
    run_iterative_scheme,
    run_td,
    simulate,
    step_qg,
    steady_velocity,
)
from sqglab.spectral import SpectralField, forward, inverse


class TestSolverConfig:
    def test_step_count_rounds_up(self):
        assert SolverConfig(alpha=0.5, dt=0.3, t_end=1.0).n_steps == 4
        assert SolverConfig(alpha=0.5, dt=0.25, t_end=1.0).n_steps == 4
        assert SolverConfig(alpha=0.5, dt=0.1, t_end=0.0).n_steps == 0

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"alpha": 1.0}, "alpha"),
            ({"dt": 0.0}, "dt"),
            ({"cfl": 1.5}, "cfl"),
            ({"integrator": "euler"}, "integrator"),
            ({"kappa": -1.0}, "kappa"),
        ],
    )
    def test_rejects_bad_values(self, kwargs, match):
        base = {"alpha": 0.5, "dt": 0.01, "t_end": 1.0}
        with pytest.raises(ConfigurationError, match=match):
            SolverConfig(**{**base, **kwargs})


class TestQG:
    def test_shear_mode_decays_exactly(self, grid32, sin_y):
        """sin(y) has a purely horizontal velocity, so only dissipation acts."""
        cfg = SolverConfig(alpha=0.5, dt=1e-3, t_end=0.1)
        state = simulate(sin_y, cfg)
        assert state.steps == 100
        assert state.t == pytest.approx(0.1)
        expected = math.exp(-state.t) * single_mode(grid32, (0, 1)).values
        np.testing.assert_allclose(inverse(state.theta).values, expected, atol=1e-8)

    @pytest.mark.parametrize("integrator", ["IF-RK2", "IF-RK4"])
    def test_nonlinear_term_vanishes_on_shear(self, sin_y, integrator):
        assert np.abs(nonlinear_term(sin_y).coeffs).max() < 1e-15
        cfg = SolverConfig(alpha=0.3, dt=0.01, t_end=0.05, integrator=integrator)
        state = simulate(sin_y, cfg)
        ratio = state.theta.l2_norm() / sin_y.l2_norm()
        assert ratio == pytest.approx(math.exp(-0.05), rel=1e-12)

    def test_ledger_has_one_row_per_step(self, grid32, rng):
        theta0 = random_field(grid32, rng, k_max=4.0) * 0.1
        seen = []
        cfg = SolverConfig(alpha=0.5, dt=0.01, t_end=0.05)
        state = simulate(theta0, cfg, on_step=seen.append)
        assert len(seen) == cfg.n_steps + 1
        assert len(state.ledger) == cfg.n_steps + 1
        assert state.ledger.times[-1] == pytest.approx(0.05)

    def test_integrators_agree(self, grid32, rng):
        theta0 = random_field(grid32, rng, k_max=4.0) * 0.1
        rk2 = simulate(theta0, SolverConfig(alpha=0.5, dt=0.005, t_end=0.1, integrator="IF-RK2"))
        rk4 = simulate(theta0, SolverConfig(alpha=0.5, dt=0.005, t_end=0.1, integrator="IF-RK4"))
        gap = (rk2.theta - rk4.theta).l2_norm()
        assert gap <= 1e-4 * rk4.theta.l2_norm()

    def test_zero_mode_drift_is_roundoff(self, grid32, rng):
        theta0 = random_field(grid32, rng, k_max=4.0) * 0.2
        state = simulate(theta0, SolverConfig(alpha=0.5, dt=0.01, t_end=0.05))
        assert state.theta.mean == 0
        assert state.mean_drift <= 1e-14 * np.abs(theta0.coeffs).max()

    def test_nonlinear_term_is_mean_free_and_skew(self, grid32, rng):
        theta = random_field(grid32, rng, k_max=6.0)
        adv = nonlinear_term(theta)
        assert abs(adv.mean) <= 1e-12 * np.abs(adv.coeffs).max()
        # <v . grad theta, theta> = 0 for divergence-free v
        pairing = np.real(np.vdot(theta.coeffs, adv.coeffs)) * grid32.length ** 2
        assert abs(pairing) <= 1e-12 * adv.l2_norm() * theta.l2_norm()

    @pytest.mark.parametrize("kappa", [1.0, 0.5])
    def test_linear_mode_at_unit_time(self, grid32, sin_y, kappa):
        cfg = SolverConfig(alpha=0.5, dt=1e-3, t_end=1.0, kappa=kappa, integrator="IF-RK4")
        state = simulate(sin_y, cfg)
        expected = math.exp(-kappa) * single_mode(grid32, (0, 1)).values
        np.testing.assert_allclose(inverse(state.theta).values, expected, atol=1e-8)

    def test_rejects_nonzero_mean(self, grid32):
        theta0 = forward(single_mode(grid32, (0, 0), kind="cos"))
        with pytest.raises(DomainError, match="mean-zero"):
            initial_state(theta0, SolverConfig(alpha=0.5, dt=0.01, t_end=1.0))

    def test_cfl_violation_names_the_limit(self, sin_y):
        cfg = SolverConfig(alpha=0.5, dt=0.1, t_end=1.0)
        state = initial_state(sin_y * 10.0, cfg)
        with pytest.raises(CFLViolation, match="use dt <=") as info:
            step_qg(state, cfg)
        assert info.value.required_dt == pytest.approx(0.4 * (2 * math.pi / 32) / 10.0, rel=1e-6)
        assert info.value.dt == 0.1


class TestTransportDiffusion:
    def test_rejects_compressible_velocity(self, grid32, sin_y):
        v = (forward(single_mode(grid32, (1, 0))), SpectralField.zeros(grid32))
        cfg = SolverConfig(alpha=0.5, dt=0.01, t_end=0.1)
        with pytest.raises(ConfigurationError, match="divergence-free"):
            run_td(sin_y, cfg, velocity=steady_velocity(v))

    def test_rejects_forcing_with_mean(self, grid32, sin_y):
        f = forward(single_mode(grid32, (0, 0), kind="cos"))
        cfg = SolverConfig(alpha=0.5, dt=0.01, t_end=0.1)
        with pytest.raises(ConfigurationError, match="forcing must be mean-zero"):
            run_td(sin_y, cfg, forcing=constant_forcing(f))

    def test_forcing_growth_trips_blowup(self, sin_y):
        cfg = SolverConfig(alpha=0.0, dt=0.01, t_end=1.0, kappa=0.0, blowup_factor=1.5)
        with pytest.raises(BlowupError, match="blowup|initial") as info:
            run_td(sin_y * 0.01, cfg, forcing=constant_forcing(sin_y))
        assert info.value.state is not None
        assert info.value.state.steps < cfg.n_steps

    def test_forced_heat_equation(self, grid32, sin_y):
        """theta' = -theta + sin(y) from 0 gives (1 - e^{-t}) sin(y)."""
        cfg = SolverConfig(alpha=0.5, dt=0.01, t_end=0.5)
        state = run_td(SpectralField.zeros(grid32), cfg, forcing=constant_forcing(sin_y))
        expected = -math.expm1(-0.5) * single_mode(grid32, (0, 1)).values
        np.testing.assert_allclose(inverse(state.theta).values, expected, atol=1e-9)
        assert state.ledger.forcing_lp[2.0][0] == pytest.approx(math.pi * math.sqrt(2.0))

    def test_forced_steady_state(self, grid32, sin_y):
        """theta' = -|D|^a theta + sin(y) settles on sin(y)."""
        cfg = SolverConfig(alpha=0.5, dt=0.05, t_end=20.0)
        state = run_td(SpectralField.zeros(grid32), cfg, forcing=constant_forcing(sin_y))
        expected = single_mode(grid32, (0, 1)).values
        np.testing.assert_allclose(inverse(state.theta).values, expected, atol=1e-6)

    def test_injected_mean_is_measured(self, grid32, sin_y, log_records):
        one = forward(single_mode(grid32, (0, 0), kind="cos"))

        def forcing(t):
            # mean-free at t = 0 so the start-up check passes
            return SpectralField.zeros(grid32) if t == 0.0 else one * 1e-3

        cfg = SolverConfig(alpha=0.5, dt=0.01, t_end=0.03)
        state = run_td(sin_y, cfg, forcing=forcing)
        assert state.theta.mean == 0
        assert state.mean_drift == pytest.approx(1e-5, rel=1e-9)
        warned = [r for r in log_records if "produced a mean" in r["message"]]
        assert len(warned) == 3 and warned[0]["level"].name == "WARNING"

    def test_steady_shear_is_transported(self, grid32):
        """Transport by (1, 0) at kappa = 0 translates the data."""
        theta0 = forward(single_mode(grid32, (1, 0)))
        one = forward(single_mode(grid32, (0, 0), kind="cos"))
        v = (one, SpectralField.zeros(grid32))
        cfg = SolverConfig(alpha=0.5, dt=0.01, t_end=0.2, kappa=0.0, dealias=False)
        state = run_td(theta0, cfg, velocity=steady_velocity(v))
        x = grid32.coordinates()[0]
        np.testing.assert_allclose(inverse(state.theta).values, np.sin(x - 0.2), atol=1e-8)


class TestTrajectoryRecord:
    def test_linear_interpolation(self):
        rec = TrajectoryRecord(np.array([0.0, 1.0, 2.0]), np.array([[0.0], [2.0], [6.0]]))
        assert rec.at(0.5)[0] == pytest.approx(1.0)
        assert rec.at(1.0)[0] == pytest.approx(2.0)
        assert rec.at(1.25)[0] == pytest.approx(3.0)
        assert rec.at(5.0)[0] == pytest.approx(6.0)


class TestIterativeScheme:
    def test_zero_data_stays_zero(self, grid32):
        cfg = SolverConfig(alpha=0.5, dt=0.01, t_end=1.0)
        scheme = run_iterative_scheme(SpectralField.zeros(grid32), cfg, n_max=3, T=0.1)
        assert isinstance(scheme, SchemeState)
        assert len(scheme.iterates) == 4
        assert scheme.diffs == [0.0, 0.0, 0.0]

    def test_iterates_cover_the_window(self, grid32, rng):
        theta0 = random_field(grid32, rng, k_max=2.0) * 0.05
        cfg = SolverConfig(alpha=0.5, dt=0.01, t_end=1.0, sample_every=5)
        scheme = run_iterative_scheme(theta0, cfg, n_max=4, T=0.1)
        assert len(scheme.diffs) == 4
        assert scheme.iterates[-1].times[-1] == pytest.approx(0.1)
        assert scheme.diffs[-1] < scheme.diffs[1]

    def test_first_iterate_is_heat_flow_of_low_pass(self, grid32, fam32, rng):
        """theta_0 = 0 carries no velocity, so theta_1 is the linear flow of S_0 theta0."""
        theta0 = random_field(grid32, rng, k_max=3.0) * 0.05
        cfg = SolverConfig(alpha=0.5, dt=0.01, t_end=1.0)
        scheme = run_iterative_scheme(theta0, cfg, n_max=1, T=0.1, fam=fam32)
        direct = run_td(low_pass(theta0, 0, fam32).without_mean(), SolverConfig(alpha=0.5, dt=0.01, t_end=0.1), fam=fam32)
        np.testing.assert_allclose(scheme.iterates[1].coeffs[-1], direct.theta.coeffs, atol=1e-15)
        assert scheme.diffs[0] > 0

    def test_rejects_nonzero_mean(self, grid32):
        theta0 = forward(single_mode(grid32, (0, 0), kind="cos"))
        with pytest.raises(DomainError):
            run_iterative_scheme(theta0, SolverConfig(alpha=0.5, dt=0.01, t_end=1.0), n_max=2, T=0.1)
