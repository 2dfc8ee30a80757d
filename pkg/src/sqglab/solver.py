"""
Time integration of the dissipative QG equation and of the linear
transport-diffusion equation

    d_t theta + v . grad theta + kappa |D|^alpha theta = f

with integrating-factor Runge-Kutta: the diagonal dissipation is integrated
exactly through exp(-h kappa |k|^alpha) and the advection is explicit. For the
QG equation v = (-R_2 theta, R_1 theta).

Also hosts the iterative approximation scheme in which theta_{n+1} solves the
linear equation with the velocity of theta_n and initial data S_n theta^0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Sequence

import numpy as np
from loguru import logger

from .dyadic import BesovSpec, DyadicFamily, besov_norm, block_lp_norms, build_family, low_pass
from .errors import BlowupError, CFLViolation, ConfigurationError, DomainError
from .ledger import LEDGER_PS, TimeSeriesLedger
from .spectral import (
    SpectralField,
    divergence,
    lp_norm,
    riesz_velocity,
    to_physical,
    to_spectral,
    velocity_gradient_sup,
)

Integrator = Literal["IF-RK2", "IF-RK4"]
INTEGRATORS: tuple[str, ...] = ("IF-RK2", "IF-RK4")
# a step mean above this fraction of the largest coefficient is more than round-off
MEAN_DRIFT_WARN = 1e-10

VelocityFn = Callable[[float], tuple[SpectralField, SpectralField]]
ForcingFn = Callable[[float], SpectralField]


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    dt: float
    t_end: float
    cfl: float = 0.4
    dealias: bool = True
    integrator: Integrator = "IF-RK4"
    kappa: float = 1.0
    blowup_factor: float = 1e6
    # scheme diffs are sampled every `sample_every` steps
    sample_every: int = 10

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ConfigurationError(f"t_end must be nonnegative, got {self.t_end}")
        if not 0.0 < self.cfl < 1.0:
            raise ConfigurationError(f"cfl must lie in (0, 1), got {self.cfl}")
        if self.integrator not in INTEGRATORS:
            raise ConfigurationError(f"unknown integrator {self.integrator!r}; use one of {INTEGRATORS}")
        if self.kappa < 0:
            raise ConfigurationError(f"kappa must be nonnegative, got {self.kappa}")
        if self.sample_every < 1:
            raise ConfigurationError("sample_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(0, math.ceil(self.t_end / self.dt - 1e-9))


@dataclass(frozen=True)
class SimulationState:
    t: float
    theta: SpectralField
    ledger: TimeSeriesLedger
    family: DyadicFamily
    steps: int = 0
    theta0_linf: float = 0.0
    forcing_specs: tuple[BesovSpec, ...] = ()
    # largest |coeff(0)| produced by a step before it is projected out
    mean_drift: float = 0.0


def _dissipation_symbol(theta: SpectralField, cfg: SolverConfig) -> np.ndarray:
    km = theta.grid.kmag
    base = np.where(km > 0, km, 0.0) ** cfg.alpha if cfg.alpha > 0 else np.where(km > 0, 1.0, 0.0)
    return cfg.kappa * base


def advection_term(theta: SpectralField, v: tuple[SpectralField, SpectralField], dealias: bool = True) -> SpectralField:
    """v . grad theta formed in physical space, transformed back, 2/3-rule truncated."""
    grid = theta.grid
    mask = grid.dealias_mask if dealias else np.ones(grid.shape, dtype=bool)
    ks = grid.wavenumbers
    th = np.where(mask, theta.coeffs, 0.0)
    parts = np.stack(
        [np.where(mask, v[0].coeffs, 0.0), np.where(mask, v[1].coeffs, 0.0), 1j * ks[0] * th, 1j * ks[1] * th]
    )
    v1, v2, d1, d2 = to_physical(parts, grid)
    out = to_spectral(v1 * d1 + v2 * d2, grid)
    return SpectralField(grid, np.where(mask, out, 0.0))


def nonlinear_term(theta: SpectralField, dealias: bool = True) -> SpectralField:
    return advection_term(theta, riesz_velocity(theta), dealias)


def _max_speed(v: tuple[SpectralField, SpectralField]) -> float:
    grid = v[0].grid
    v1, v2 = to_physical(np.stack([v[0].coeffs, v[1].coeffs]), grid)
    return float(np.sqrt(v1 * v1 + v2 * v2).max())


def required_dt(v: tuple[SpectralField, SpectralField], cfg: SolverConfig) -> float:
    speed = _max_speed(v)
    return math.inf if speed == 0 else cfg.cfl * v[0].grid.spacing / speed


def check_cfl(v: tuple[SpectralField, SpectralField], cfg: SolverConfig, h: float | None = None) -> None:
    limit = required_dt(v, cfg)
    h = cfg.dt if h is None else h
    if h > limit:
        raise CFLViolation(h, limit)


def _if_rk(
    c: np.ndarray,
    t: float,
    h: float,
    rhs: Callable[[np.ndarray, float], np.ndarray],
    lin: np.ndarray,
    integrator: str,
) -> np.ndarray:
    """Lawson (integrating-factor) RK2/RK4 for c' = -lin c + rhs(c, t)."""
    e1 = np.exp(-h * lin)
    if integrator == "IF-RK2":
        k1 = rhs(c, t)
        a = e1 * (c + h * k1)
        k2 = rhs(a, t + h)
        return e1 * c + 0.5 * h * (e1 * k1 + k2)
    eh = np.exp(-0.5 * h * lin)
    k1 = rhs(c, t)
    a = eh * (c + 0.5 * h * k1)
    k2 = rhs(a, t + 0.5 * h)
    b = eh * c + 0.5 * h * k2
    k3 = rhs(b, t + 0.5 * h)
    d = e1 * c + h * eh * k3
    k4 = rhs(d, t + h)
    return e1 * c + h / 6.0 * (e1 * k1 + 2.0 * eh * (k2 + k3) + k4)


def _record(
    ledger: TimeSeriesLedger,
    t: float,
    theta: SpectralField,
    v: tuple[SpectralField, SpectralField],
    fam: DyadicFamily,
    cfg: SolverConfig,
    forcing: SpectralField | None,
    forcing_specs: Sequence[BesovSpec],
) -> None:
    grid = theta.grid
    phys = to_physical(theta.coeffs, grid)
    lp = {p: lp_norm(phys, p, grid) for p in LEDGER_PS}
    blocks = block_lp_norms(theta, fam, LEDGER_PS)
    power = np.abs(theta.coeffs) ** 2
    energy = grid.length ** grid.d * float(power.sum())
    dissipation = grid.length ** grid.d * float((_dissipation_symbol(theta, cfg) * power).sum())
    forcing_lp = forcing_besov = None
    if forcing is not None:
        fphys = to_physical(forcing.coeffs, grid)
        forcing_lp = {p: lp_norm(fphys, p, grid) for p in LEDGER_PS}
        forcing_besov = {spec: besov_norm(forcing, spec, fam) for spec in forcing_specs}
    ledger.record(
        t,
        lp,
        blocks,
        velocity_gradient_sup(*v),
        energy=energy,
        dissipation=dissipation,
        forcing_lp=forcing_lp,
        forcing_besov=forcing_besov,
    )


def _zero_velocity(theta: SpectralField) -> tuple[SpectralField, SpectralField]:
    return SpectralField.zeros(theta.grid), SpectralField.zeros(theta.grid)


def initial_state(
    theta0: SpectralField,
    cfg: SolverConfig,
    fam: DyadicFamily | None = None,
    velocity: VelocityFn | None = None,
    forcing: ForcingFn | None = None,
    forcing_specs: Sequence[BesovSpec] = (),
) -> SimulationState:
    """State at t = 0 with its ledger row. `velocity=None` means the QG velocity."""
    if not theta0.mean_zero:
        raise DomainError(f"initial data must be mean-zero (coeff(0) = {theta0.mean!r})")
    fam = fam or build_family(theta0.grid)
    v = velocity(0.0) if velocity is not None else riesz_velocity(theta0)
    f0 = forcing(0.0) if forcing is not None else None
    ledger = TimeSeriesLedger()
    _record(ledger, 0.0, theta0, v, fam, cfg, f0, forcing_specs)
    return SimulationState(
        t=0.0,
        theta=theta0,
        ledger=ledger,
        family=fam,
        theta0_linf=ledger.lp[math.inf][0],
        forcing_specs=tuple(forcing_specs),
    )


def _finish_step(
    state: SimulationState,
    cfg: SolverConfig,
    coeffs: np.ndarray,
    h: float,
    v_of: Callable[[SpectralField, float], tuple[SpectralField, SpectralField]],
    forcing: ForcingFn | None,
) -> SimulationState:
    grid = state.theta.grid
    if not np.all(np.isfinite(coeffs)):
        raise BlowupError(f"non-finite values at t={state.t + h:.6g}", state=state)
    t = state.t + h
    zero = (0,) * grid.d
    drift = float(abs(coeffs[zero]))
    if drift > MEAN_DRIFT_WARN * float(np.abs(coeffs).max()):
        logger.warning(f"step to t={t:.6g} produced a mean of {drift:.3e}; projecting it out")
    coeffs[zero] = 0.0
    theta = SpectralField(grid, coeffs)
    linf = lp_norm(to_physical(coeffs, grid), math.inf, grid)
    if state.theta0_linf > 0 and linf > cfg.blowup_factor * state.theta0_linf:
        raise BlowupError(
            f"||theta||_inf grew to {linf:.3e} (> {cfg.blowup_factor:g} x initial) at t={t:.6g}", state=state
        )
    f = forcing(t) if forcing is not None else None
    _record(state.ledger, t, theta, v_of(theta, t), state.family, cfg, f, state.forcing_specs)
    return replace(state, t=t, theta=theta, steps=state.steps + 1, mean_drift=max(state.mean_drift, drift))


def _step_size(state: SimulationState, cfg: SolverConfig) -> float:
    return min(cfg.dt, cfg.t_end - state.t) if cfg.t_end - state.t > 1e-12 else cfg.dt


def step_qg(state: SimulationState, cfg: SolverConfig) -> SimulationState:
    grid = state.theta.grid
    h = _step_size(state, cfg)
    check_cfl(riesz_velocity(state.theta), cfg, h)
    lin = _dissipation_symbol(state.theta, cfg)

    def rhs(c: np.ndarray, _t: float) -> np.ndarray:
        th = SpectralField(grid, c)
        th = th.without_mean() if not th.mean_zero else th
        return -nonlinear_term(th, cfg.dealias).coeffs

    coeffs = _if_rk(state.theta.coeffs, state.t, h, rhs, lin, cfg.integrator)
    return _finish_step(state, cfg, coeffs, h, lambda th, _t: riesz_velocity(th), None)


def _check_divergence_free(v: tuple[SpectralField, SpectralField], tol: float = 1e-8) -> None:
    div = np.abs(divergence(v).coeffs).max()
    scale = max(np.abs(v[0].coeffs).max(), np.abs(v[1].coeffs).max()) * v[0].grid.k_max
    if div > tol * max(scale, 1.0):
        raise ConfigurationError(f"prescribed velocity is not divergence-free (max |div| = {div:.3e})")


def step_td(
    state: SimulationState,
    cfg: SolverConfig,
    v_prescribed: VelocityFn | None,
    f: ForcingFn | None = None,
) -> SimulationState:
    grid = state.theta.grid
    h = _step_size(state, cfg)
    velocity = v_prescribed or (lambda _t: _zero_velocity(state.theta))
    v0 = velocity(state.t)
    if state.steps == 0:
        _check_divergence_free(v0)
        if f is not None and not f(state.t).mean_zero:
            raise ConfigurationError("forcing must be mean-zero")
    check_cfl(v0, cfg, h)
    lin = _dissipation_symbol(state.theta, cfg)

    def rhs(c: np.ndarray, t: float) -> np.ndarray:
        out = -advection_term(SpectralField(grid, c), velocity(t), cfg.dealias).coeffs
        if f is not None:
            out = out + f(t).coeffs
        return out

    coeffs = _if_rk(state.theta.coeffs, state.t, h, rhs, lin, cfg.integrator)
    return _finish_step(state, cfg, coeffs, h, lambda _th, t: velocity(t), f)


def simulate(
    theta0: SpectralField,
    cfg: SolverConfig,
    fam: DyadicFamily | None = None,
    on_step: Callable[[SimulationState], None] | None = None,
) -> SimulationState:
    """Drive step_qg to t_end; `on_step` sees every state including t = 0."""
    state = initial_state(theta0, cfg, fam)
    if on_step:
        on_step(state)
    for _ in range(cfg.n_steps):
        state = step_qg(state, cfg)
        if on_step:
            on_step(state)
    return state


def run_td(
    theta0: SpectralField,
    cfg: SolverConfig,
    velocity: VelocityFn | None = None,
    forcing: ForcingFn | None = None,
    forcing_specs: Sequence[BesovSpec] = (),
    fam: DyadicFamily | None = None,
    on_step: Callable[[SimulationState], None] | None = None,
) -> SimulationState:
    velocity = velocity or (lambda _t: _zero_velocity(theta0))
    state = initial_state(theta0, cfg, fam, velocity, forcing, forcing_specs)
    if on_step:
        on_step(state)
    for _ in range(cfg.n_steps):
        state = step_td(state, cfg, velocity, forcing)
        if on_step:
            on_step(state)
    return state


def constant_forcing(f: SpectralField) -> ForcingFn:
    return lambda _t: f


def steady_velocity(v: tuple[SpectralField, SpectralField]) -> VelocityFn:
    return lambda _t: v


@dataclass
class TrajectoryRecord:
    """theta(t_i) for every step of one iterate, stacked along axis 0."""

    times: np.ndarray
    coeffs: np.ndarray

    def at(self, t: float) -> np.ndarray:
        """Coefficients at t, linear in time between stored steps."""
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(max(i, 0), len(self.times) - 1)
        if i == len(self.times) - 1 or self.times[i] == t:
            c = self.coeffs[i]
        else:
            w = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
            c = (1.0 - w) * self.coeffs[i] + w * self.coeffs[i + 1]
        return c


@dataclass
class SchemeState:
    iterates: list[TrajectoryRecord] = field(default_factory=list)
    diffs: list[float] = field(default_factory=list)


def run_iterative_scheme(
    theta0: SpectralField,
    cfg: SolverConfig,
    n_max: int,
    T: float,
    fam: DyadicFamily | None = None,
) -> SchemeState:
    """Iterates theta_1..theta_{n_max}; diffs[n-1] = sup_i ||theta_n - theta_{n-1}||_{B^0_{inf,1}}."""
    if not theta0.mean_zero:
        raise DomainError("iterative scheme needs mean-zero initial data")
    grid = theta0.grid
    fam = fam or build_family(grid)
    run_cfg = replace(cfg, t_end=T)
    n_steps = run_cfg.n_steps
    times = np.array([min(i * cfg.dt, T) for i in range(n_steps + 1)])
    scheme = SchemeState(iterates=[TrajectoryRecord(times, np.zeros((n_steps + 1, *grid.shape), dtype=np.complex128))])
    sampled = sorted(set(range(0, n_steps + 1, cfg.sample_every)) | {n_steps})
    spec = BesovSpec(0.0, math.inf, 1.0)

    for n in range(n_max):
        prev = scheme.iterates[-1]

        def velocity(t: float, prev: TrajectoryRecord = prev) -> tuple[SpectralField, SpectralField]:
            return riesz_velocity(SpectralField(grid, prev.at(t)).without_mean())

        data = low_pass(theta0, n, fam).without_mean()
        store = np.empty_like(prev.coeffs)

        def keep(state: SimulationState, store: np.ndarray = store) -> None:
            store[state.steps] = state.theta.coeffs

        try:
            run_td(data, run_cfg, velocity=velocity, fam=fam, on_step=keep)
        except BlowupError as exc:
            logger.error(f"iterate {n + 1} blew up: {exc}")
            raise BlowupError(str(exc), state=scheme) from exc
        record = TrajectoryRecord(times, store)
        diff = max(
            besov_norm(SpectralField(grid, store[i] - prev.coeffs[i]), spec, fam) for i in sampled
        )
        scheme.iterates.append(record)
        scheme.diffs.append(float(diff))
        logger.debug(f"scheme iterate {n + 1}: diff {diff:.3e}")
    return scheme
