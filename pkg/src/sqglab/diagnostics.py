"""
Post-run and a-priori diagnostics.

Everything here reads either initial data or a finished ledger; nothing
advances time. Constants that the estimates leave unquantified are returned as
raw ratios for the suites to record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .dyadic import BesovSpec, DyadicFamily, besov_from_blocks, besov_norm, block_lp_norms, build_family
from .errors import ConfigurationError, DomainError, IncompleteLedgerError, UndefinedRatioError
from .fractional import semigroup_decay_fit
from .ledger import LEDGER_PS, TimeSeriesLedger, mixed_time_norm
from .solver import SchemeState, SimulationState
from .spectral import PhysicalField, SpectralField, forward, rescale


def critical_index(p: float, alpha: float) -> float:
    """s_c^p = 1 + 2/p - alpha."""
    return 1.0 + (0.0 if math.isinf(p) else 2.0 / p) - alpha


@dataclass(frozen=True)
class SmallnessReport:
    alpha: float
    b_inf: float
    critical: dict[float, float]
    # X_inf = inhomogeneous B^{1-alpha}_{inf,1} intersected with B^0_{inf,1}
    x_inhomogeneous: float
    x_zero: float

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "b_inf_1_minus_alpha": self.b_inf,
            "critical": {("inf" if math.isinf(p) else f"{p:g}"): v for p, v in self.critical.items()},
            "x_inf": {"inhomogeneous": self.x_inhomogeneous, "b0_inf_1": self.x_zero},
        }


def _require_mean_zero(theta0: SpectralField) -> None:
    if not theta0.mean_zero:
        raise DomainError(f"initial data must be mean-zero (coeff(0) = {theta0.mean!r})")


def smallness_report(theta0: SpectralField, alpha: float, fam: DyadicFamily | None = None) -> SmallnessReport:
    _require_mean_zero(theta0)
    fam = fam or build_family(theta0.grid)
    crit = {p: besov_norm(theta0, BesovSpec(critical_index(p, alpha), p, 1.0), fam) for p in LEDGER_PS}
    return SmallnessReport(
        alpha=alpha,
        b_inf=crit[math.inf],
        critical=crit,
        x_inhomogeneous=besov_norm(theta0, BesovSpec(1.0 - alpha, math.inf, 1.0, homogeneous=False), fam),
        x_zero=besov_norm(theta0, BesovSpec(0.0, math.inf, 1.0), fam),
    )


def _local_time_terms(theta0: SpectralField, alpha: float, fam: DyadicFamily) -> tuple[np.ndarray, np.ndarray]:
    norms = block_lp_norms(theta0, fam, (math.inf,))
    qs = np.array(sorted(q for q, _ in norms), dtype=np.float64)
    amps = np.array([2.0 ** (q * (1.0 - alpha)) * norms[(int(q), math.inf)] for q in qs])
    return 2.0 ** (qs * alpha), amps


def local_time_functional(
    theta0: SpectralField, alpha: float, c: float, t: float, fam: DyadicFamily | None = None
) -> float:
    """sum_q (1 - exp(-c t 2^{q alpha}))^{1/2} 2^{q(1-alpha)} ||Delta_q theta0||_inf."""
    if not c > 0:
        raise ConfigurationError(f"rate c must be positive, got {c}")
    if t < 0:
        raise ConfigurationError(f"time must be nonnegative, got {t}")
    fam = fam or build_family(theta0.grid)
    rates, amps = _local_time_terms(theta0, alpha, fam)
    return float(np.sum(np.sqrt(-np.expm1(-c * t * rates)) * amps))


def local_existence_time(
    theta0: SpectralField,
    alpha: float,
    c: float,
    eta: float,
    fam: DyadicFamily | None = None,
    t_cap: float = 1e12,
) -> float:
    """T0(eta) = sup{t : functional(t) <= eta}; inf when the saturation value is <= eta."""
    if not c > 0 or not eta > 0:
        raise ConfigurationError(f"need c > 0 and eta > 0, got c={c}, eta={eta}")
    fam = fam or build_family(theta0.grid)
    rates, amps = _local_time_terms(theta0, alpha, fam)
    if float(amps.sum()) <= eta:
        return math.inf

    def excess(t: float) -> float:
        return float(np.sum(np.sqrt(-np.expm1(-c * t * rates)) * amps)) - eta

    hi = 1.0
    while excess(hi) <= 0:
        hi *= 2.0
        if hi > t_cap:
            return math.inf
    return float(brentq(excess, 0.0, hi, xtol=1e-14, rtol=1e-12))


def fitted_decay_rate(
    theta0: SpectralField,
    alpha: float,
    fam: DyadicFamily | None = None,
    points: int = 8,
    fallback: float | None = None,
) -> float:
    """Smallest semigroup decay rate c fitted on the nonzero blocks of theta0.

    Each block q is fitted over t in [0, 3 / 2^{q alpha}]. The minimum keeps
    the bound C exp(-c t 2^{q alpha}) valid on every block at once.
    """
    fam = fam or build_family(theta0.grid)
    norms = block_lp_norms(theta0, fam, (math.inf,))
    top = max(norms.values(), default=0.0)
    rates = []
    for (q, _), nrm in sorted(norms.items()):
        if nrm <= 1e-12 * top:
            continue
        block = SpectralField(theta0.grid, fam.block_symbol(q) * theta0.coeffs)
        fit = semigroup_decay_fit(block, alpha, q, np.linspace(0.0, 3.0 / 2.0 ** (q * alpha), points))
        if fit.c > 0:
            rates.append(fit.c)
    if rates:
        return float(min(rates))
    if fallback is None:
        raise UndefinedRatioError("no block of the data gives a positive decay rate")
    logger.warning(f"no block gives a positive decay rate; using c={fallback}")
    return fallback


@dataclass(frozen=True)
class Theorem2Probe:
    s: float
    p: float
    r: float
    lhs: float
    initial: float
    forcing: float
    v_total: float

    @property
    def data(self) -> float:
        return self.initial + self.forcing

    @property
    def ratio(self) -> float:
        """lhs / (e^{V(t)} (||theta0|| + ||f||_{L^1 B^s})) with C = 1."""
        denom = math.exp(self.v_total) * self.data
        if denom == 0:
            if self.lhs == 0:
                return 0.0
            raise UndefinedRatioError("zero data with nonzero solution norm")
        return self.lhs / denom


def theorem2_probe(
    state: SimulationState, alpha: float, s: float, p: float, r: float, qg_velocity: bool = False
) -> Theorem2Probe:
    """Both sides of the smoothing estimate for a finished run.

    A prescribed velocity needs -1 < s < 1. With `qg_velocity` the run was
    advected by its own velocity grad^perp |D|^{-1} theta (a `simulate` run),
    for which the estimate holds for every s > -1.
    """
    if qg_velocity:
        if not s > -1.0:
            raise DomainError(f"smoothing estimate for the QG velocity needs s > -1, got {s}")
    elif not -1.0 < s < 1.0:
        raise DomainError(f"smoothing estimate needs -1 < s < 1 (s > -1 with qg_velocity), got {s}")
    if r not in (1.0, 2.0, math.inf):
        raise ConfigurationError(f"time exponent must be 1, 2 or inf, got {r}")
    ledger = state.ledger
    T = state.t
    lhs = mixed_time_norm(ledger, BesovSpec(s + (0.0 if math.isinf(r) else alpha / r), p, 1.0), r, T, tilde=True)
    initial = besov_from_blocks(ledger.block_norms_at(0, p), BesovSpec(s, p, 1.0))
    forcing = 0.0
    if ledger.forcing_lp:
        spec = BesovSpec(s, p, 1.0)
        if spec not in ledger.forcing_besov:
            raise IncompleteLedgerError(f"forcing was recorded without {spec.label()}")
        forcing = float(trapezoid(np.asarray(ledger.forcing_besov[spec]), np.asarray(ledger.times)))
    v_total = float(ledger.accumulated_v()[-1])
    return Theorem2Probe(s=s, p=p, r=r, lhs=lhs, initial=initial, forcing=forcing, v_total=v_total)


@dataclass(frozen=True)
class Violation:
    step: int
    p: float
    value: float
    bound: float


def maximum_principle_violations(ledger: TimeSeriesLedger, tol: float = 1e-6, forced: bool = False) -> list[Violation]:
    """Steps at which ||theta||_{L^p} breaks the (forced) maximum principle."""
    out: list[Violation] = []
    if forced and not ledger.forcing_lp:
        raise IncompleteLedgerError("forced check needs recorded forcing norms")
    for p in LEDGER_PS:
        if p not in ledger.lp:
            raise IncompleteLedgerError(f"ledger has no L^{p} series")
        seq = np.asarray(ledger.lp[p])
        if forced:
            acc = ledger.accumulated_forcing(p)
            for i in range(1, len(seq)):
                bound = seq[0] + acc[i]
                if seq[i] - bound > tol * bound:
                    out.append(Violation(i, p, float(seq[i]), float(bound)))
        else:
            for i in range(1, len(seq)):
                if seq[i] > seq[i - 1] * (1.0 + tol):
                    out.append(Violation(i, p, float(seq[i]), float(seq[i - 1])))
    if out:
        logger.warning(f"maximum principle: {len(out)} violating steps")
    return out


def energy_balance_residuals(ledger: TimeSeriesLedger) -> np.ndarray:
    """Relative gap between dE/dt and -2 kappa || |D|^{alpha/2} theta ||^2 per step (unforced)."""
    t = np.asarray(ledger.times)
    e = np.asarray(ledger.energy)
    d = np.asarray(ledger.dissipation)
    if len(t) < 2:
        return np.zeros(0)
    rate = np.diff(e) / np.diff(t)
    expected = -(d[1:] + d[:-1])
    scale = np.maximum(np.abs(expected), np.finfo(float).tiny)
    return np.where(np.abs(expected) > 0, np.abs(rate - expected) / scale, np.abs(rate))


def subcritical_time_bound(
    theta0: SpectralField, alpha: float, s: float, p: float, fam: DyadicFamily | None = None
) -> float:
    """||theta0||_{B^{s-2/p}_{inf,1}}^{-alpha/(s-s_c)} for s above the critical index."""
    sc = critical_index(p, alpha)
    if not s > sc:
        raise DomainError(f"subcritical bound needs s > s_c = {sc}, got {s}")
    fam = fam or build_family(theta0.grid)
    shift = 0.0 if math.isinf(p) else 2.0 / p
    norm = besov_norm(theta0, BesovSpec(s - shift, math.inf, 1.0), fam)
    if norm == 0:
        return math.inf
    return norm ** (-alpha / (s - sc))


def scaling_ratio(theta: PhysicalField, lam: float, alpha: float, spec: BesovSpec, fam: DyadicFamily) -> float:
    """||lam^{alpha-1} theta(lam .)|| / ||theta|| in the given Besov norm."""
    base = besov_norm(forward(theta).without_mean(), spec, fam)
    if base == 0:
        raise UndefinedRatioError("scaling ratio of a zero field")
    scaled = rescale(theta, lam, alpha)
    return besov_norm(forward(scaled).without_mean(), spec, fam) / base


def ledger_besov_series(ledger: TimeSeriesLedger, spec: BesovSpec) -> np.ndarray:
    """Besov norm of theta(t_i) for every ledger row, from the per-block norms."""
    return np.array([besov_from_blocks(ledger.block_norms_at(i, spec.p), spec) for i in range(len(ledger))])


def v_tail_increment(ledger: TimeSeriesLedger, fraction: float = 0.25) -> float:
    """V(T) - V((1 - fraction) T)."""
    v = ledger.accumulated_v()
    if v.size == 0:
        raise IncompleteLedgerError("empty ledger")
    t = np.asarray(ledger.times)
    i = int(np.searchsorted(t, (1.0 - fraction) * t[-1]))
    return float(v[-1] - v[min(i, len(v) - 1)])


@dataclass
class ContractionSummary:
    # ratios[n] = diff_{n+1} / diff_n, diffs numbered from 1
    ratios: dict[int, float] = field(default_factory=dict)
    skipped: list[int] = field(default_factory=list)

    def worst(self, start: int = 2) -> float:
        vals = [r for n, r in self.ratios.items() if n >= start]
        return max(vals) if vals else 0.0


def contraction_ratios(scheme: SchemeState, rel_floor: float = 1e-10) -> ContractionSummary:
    """diff_{n+1} / diff_n; pairs whose denominator sits at round-off are skipped."""
    out = ContractionSummary()
    if not scheme.diffs:
        return out
    floor = rel_floor * max(scheme.diffs)
    for n in range(1, len(scheme.diffs)):
        prev, cur = scheme.diffs[n - 1], scheme.diffs[n]
        if prev <= floor:
            out.skipped.append(n)
            continue
        out.ratios[n] = cur / prev
    return out
